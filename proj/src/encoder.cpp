#include "pathqa/encoder.hpp"

#include <cmath>
#include <fstream>

#include "pathqa/errors.hpp"
#include "pathqa/io_util.hpp"

namespace pathqa {

namespace {
constexpr char kEncoderMagic[5] = "PQQE";
}  // namespace

std::vector<double> encode_question(const EncoderParams& params,
                                    const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw ContractError("encode_question: empty token list");
    const auto token_dim = static_cast<std::size_t>(params.token_dim);
    const auto hidden_dim = static_cast<std::size_t>(params.hidden_dim);
    const auto width = static_cast<std::size_t>(params.output_width);

    std::vector<double> pooled(token_dim, 0.0);
    for (const auto& token : tokens) {
        const double* row = params.token_table.data() + params.token_row(token) * token_dim;
        for (std::size_t d = 0; d < token_dim; ++d) pooled[d] += row[d];
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (double& v : pooled) v *= inv;

    std::vector<double> hidden(hidden_dim);
    for (std::size_t i = 0; i < hidden_dim; ++i) {
        double acc = params.b1[i];
        const double* row = params.w1.data() + i * token_dim;
        for (std::size_t d = 0; d < token_dim; ++d) acc += row[d] * pooled[d];
        hidden[i] = std::tanh(acc);
    }

    std::vector<double> out(width);
    for (std::size_t i = 0; i < width; ++i) {
        double acc = params.b2[i];
        const double* row = params.w2.data() + i * hidden_dim;
        for (std::size_t d = 0; d < hidden_dim; ++d) acc += row[d] * hidden[d];
        out[i] = acc;
    }

    if (params.unit_modulus_output) {
        for (std::size_t d = 0; d + 1 < width; d += 2) {
            const double norm = std::hypot(out[d], out[d + 1]);
            if (norm > 0.0) {
                out[d] /= norm;
                out[d + 1] /= norm;
            } else {
                out[d] = 1.0;  // measure-zero fallback, keeps the invariant
                out[d + 1] = 0.0;
            }
        }
    }
    return out;
}

void EncoderParams::save(std::ostream& out) const {
    out.write(kEncoderMagic, 4);
    io::write_u32(out, kEncoderFormatVersion);
    io::write_u32(out, static_cast<std::uint32_t>(vocab.size()));
    io::write_u32(out, static_cast<std::uint32_t>(token_dim));
    io::write_u32(out, static_cast<std::uint32_t>(hidden_dim));
    io::write_u32(out, static_cast<std::uint32_t>(output_width));
    io::write_u8(out, unit_modulus_output ? 1 : 0);
    for (const auto& token : vocab) io::write_string(out, token);
    for (double v : token_table) io::write_f64(out, v);
    for (double v : w1) io::write_f64(out, v);
    for (double v : b1) io::write_f64(out, v);
    for (double v : w2) io::write_f64(out, v);
    for (double v : b2) io::write_f64(out, v);
    if (!out) throw IoError("failed to write encoder checkpoint");
}

EncoderParams EncoderParams::load(std::istream& in) {
    io::expect_magic(in, kEncoderMagic, "encoder checkpoint");
    const auto version = io::read_u32(in);
    if (version != kEncoderFormatVersion)
        throw IoError("unsupported encoder checkpoint version " + std::to_string(version));

    EncoderParams params;
    const auto vocab_size = io::read_u32(in);
    params.token_dim = static_cast<int>(io::read_u32(in));
    params.hidden_dim = static_cast<int>(io::read_u32(in));
    params.output_width = static_cast<int>(io::read_u32(in));
    params.unit_modulus_output = io::read_u8(in) != 0;

    params.vocab.reserve(vocab_size);
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
        params.vocab.push_back(io::read_string(in));
        params.index.emplace(params.vocab.back(), i);
    }
    auto read_block = [&](std::vector<double>& block, std::size_t n) {
        block.resize(n);
        for (auto& v : block) v = io::read_f64(in);
    };
    read_block(params.token_table, std::size_t{vocab_size} * params.token_dim);
    read_block(params.w1, static_cast<std::size_t>(params.hidden_dim) * params.token_dim);
    read_block(params.b1, params.hidden_dim);
    read_block(params.w2, static_cast<std::size_t>(params.output_width) * params.hidden_dim);
    read_block(params.b2, params.output_width);
    return params;
}

void EncoderParams::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    save(out);
}

EncoderParams EncoderParams::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    return load(in);
}

}  // namespace pathqa
