#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathqa/qa_data.hpp"

namespace pathqa {

// Encoder checkpoint schema version.
inline constexpr std::uint32_t kEncoderFormatVersion = 1;

// Mean-of-token-embeddings encoder with a two-layer tanh projection into the
// relation space. Immutable once trained; encode_question is pure.
struct EncoderParams {
    std::vector<std::string> vocab;                         // row -> token, row 0 is <unk>
    std::unordered_map<std::string, std::uint32_t> index;   // token -> row
    int token_dim = 256;
    int hidden_dim = 256;
    int output_width = 0;            // stored real width of the relation space
    bool unit_modulus_output = false;  // HadamardRotation: q plays the relation role

    std::vector<double> token_table;  // vocab.size() x token_dim
    std::vector<double> w1;           // hidden_dim x token_dim (row-major)
    std::vector<double> b1;           // hidden_dim
    std::vector<double> w2;           // output_width x hidden_dim
    std::vector<double> b2;           // output_width

    std::uint32_t token_row(const std::string& token) const {
        const auto it = index.find(token);
        return it == index.end() ? 0u : it->second;
    }

    void save(std::ostream& out) const;
    static EncoderParams load(std::istream& in);
    void save_file(const std::string& path) const;
    static EncoderParams load_file(const std::string& path);
};

std::vector<double> encode_question(const EncoderParams& params,
                                    const std::vector<std::string>& tokens);

}  // namespace pathqa
