#include "pathqa/embedding.hpp"

#include <cmath>
#include <fstream>

#include "pathqa/io_util.hpp"

namespace pathqa {

namespace {
constexpr char kModelMagic[5] = "PQEM";
constexpr double kPi = 3.14159265358979323846;
}  // namespace

const char* to_string(SpaceKind k) {
    return k == SpaceKind::Real ? "real" : "complex";
}

const char* to_string(KgeFamily f) {
    switch (f) {
        case KgeFamily::Additive: return "additive";
        case KgeFamily::Multiplicative: return "multiplicative";
        case KgeFamily::HadamardRotation: return "rotation";
    }
    return "?";
}

EmbeddingSpace make_space(KgeFamily family, SpaceKind kind, int dim) {
    if (dim < 1) throw ContractError("embedding dim must be >= 1");
    if (family == KgeFamily::Additive && kind != SpaceKind::Real)
        throw ContractError("additive family uses a real space");
    if (family == KgeFamily::HadamardRotation && kind != SpaceKind::Complex)
        throw ContractError("rotation family uses a complex space");
    return EmbeddingSpace{kind, dim};
}

EmbeddingModel::EmbeddingModel(KgeFamily family, EmbeddingSpace space, std::size_t entity_count,
                               std::size_t relation_count)
    : family_(family),
      space_(space),
      entity_count_(entity_count),
      relation_count_(relation_count),
      entity_data_(entity_count * static_cast<std::size_t>(space.real_width()), 0.0),
      relation_data_(relation_count * static_cast<std::size_t>(space.real_width()), 0.0) {}

EmbeddingModel EmbeddingModel::random_init(KgeFamily family, EmbeddingSpace space,
                                           std::size_t entity_count, std::size_t relation_count,
                                           Rng& rng) {
    EmbeddingModel m(family, space, entity_count, relation_count);
    const double bound = 0.5 / std::sqrt(static_cast<double>(space.dim));
    for (double& v : m.entity_data_) v = rng.uniform(-bound, bound);
    if (family == KgeFamily::HadamardRotation) {
        for (std::size_t r = 0; r < relation_count; ++r) {
            std::span<double> row = m.relation(static_cast<RelationId>(r));
            for (int d = 0; d < space.dim; ++d) {
                double angle = rng.uniform(0.0, 2.0 * kPi);
                row[2 * d] = std::cos(angle);
                row[2 * d + 1] = std::sin(angle);
            }
        }
    } else {
        for (double& v : m.relation_data_) v = rng.uniform(-bound, bound);
    }
    return m;
}

std::span<double> EmbeddingModel::entity(EntityId e) {
    if (e >= entity_count_) throw ContractError("entity id out of range");
    return {entity_data_.data() + std::size_t{e} * width(), static_cast<std::size_t>(width())};
}

std::span<const double> EmbeddingModel::entity(EntityId e) const {
    if (e >= entity_count_) throw ContractError("entity id out of range");
    return {entity_data_.data() + std::size_t{e} * width(), static_cast<std::size_t>(width())};
}

std::span<double> EmbeddingModel::relation(RelationId r) {
    if (r >= relation_count_) throw ContractError("relation id out of range");
    return {relation_data_.data() + std::size_t{r} * width(), static_cast<std::size_t>(width())};
}

std::span<const double> EmbeddingModel::relation(RelationId r) const {
    if (r >= relation_count_) throw ContractError("relation id out of range");
    return {relation_data_.data() + std::size_t{r} * width(), static_cast<std::size_t>(width())};
}

void EmbeddingModel::renormalize_relation(RelationId r) {
    std::span<double> row = relation(r);
    for (int d = 0; d < space_.dim; ++d) {
        double re = row[2 * d], im = row[2 * d + 1];
        double mod = std::sqrt(re * re + im * im);
        if (mod > 0.0) {
            row[2 * d] = re / mod;
            row[2 * d + 1] = im / mod;
        } else {
            row[2 * d] = 1.0;
            row[2 * d + 1] = 0.0;
        }
    }
}

namespace {

void check_width(const EmbeddingSpace& space, std::span<const double> h, std::span<const double> r,
                 std::span<const double> t) {
    const std::size_t w = static_cast<std::size_t>(space.real_width());
    if (h.size() != w || r.size() != w || t.size() != w)
        throw ContractError("vector width does not match the embedding space");
}

double score_additive(std::span<const double> h, std::span<const double> r,
                      std::span<const double> t) {
    double sq = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        double d = h[i] + r[i] - t[i];
        sq += d * d;
    }
    return -std::sqrt(sq);
}

double score_mult_real(std::span<const double> h, std::span<const double> r,
                       std::span<const double> t) {
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) s += h[i] * r[i] * t[i];
    return s;
}

double score_mult_complex(int dim, std::span<const double> h, std::span<const double> r,
                          std::span<const double> t) {
    // Re(sum_d h_d r_d conj(t_d))
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        double hr = h[2 * d], hi = h[2 * d + 1];
        double rr = r[2 * d], ri = r[2 * d + 1];
        double tr = t[2 * d], ti = t[2 * d + 1];
        double pr = hr * rr - hi * ri;  // h*r
        double pi = hr * ri + hi * rr;
        s += pr * tr + pi * ti;
    }
    return s;
}

double score_rotation(int dim, std::span<const double> h, std::span<const double> r,
                      std::span<const double> t) {
    double sq = 0.0;
    for (int d = 0; d < dim; ++d) {
        double hr = h[2 * d], hi = h[2 * d + 1];
        double rr = r[2 * d], ri = r[2 * d + 1];
        double dr = hr * rr - hi * ri - t[2 * d];
        double di = hr * ri + hi * rr - t[2 * d + 1];
        sq += dr * dr + di * di;
    }
    return -std::sqrt(sq);
}

}  // namespace

double score_vectors(KgeFamily family, const EmbeddingSpace& space, std::span<const double> h,
                     std::span<const double> r, std::span<const double> t) {
    check_width(space, h, r, t);
    switch (family) {
        case KgeFamily::Additive:
            return score_additive(h, r, t);
        case KgeFamily::Multiplicative:
            return space.kind == SpaceKind::Real ? score_mult_real(h, r, t)
                                                 : score_mult_complex(space.dim, h, r, t);
        case KgeFamily::HadamardRotation:
            return score_rotation(space.dim, h, r, t);
    }
    throw ContractError("unknown family");
}

void score_grad_vectors(KgeFamily family, const EmbeddingSpace& space, std::span<const double> h,
                        std::span<const double> r, std::span<const double> t, double weight,
                        std::span<double> gh, std::span<double> gr, std::span<double> gt) {
    check_width(space, h, r, t);
    const std::size_t w = static_cast<std::size_t>(space.real_width());
    auto want = [&](std::span<double> g) {
        if (g.empty()) return false;
        if (g.size() != w) throw ContractError("gradient width does not match the embedding space");
        return true;
    };
    const bool wh = want(gh), wr = want(gr), wt = want(gt);

    switch (family) {
        case KgeFamily::Additive: {
            double sq = 0.0;
            for (std::size_t i = 0; i < w; ++i) {
                double d = h[i] + r[i] - t[i];
                sq += d * d;
            }
            double norm = std::sqrt(sq);
            if (norm == 0.0) return;  // subgradient 0 at the kink
            for (std::size_t i = 0; i < w; ++i) {
                double g = weight * -(h[i] + r[i] - t[i]) / norm;
                if (wh) gh[i] += g;
                if (wr) gr[i] += g;
                if (wt) gt[i] -= g;
            }
            return;
        }
        case KgeFamily::Multiplicative: {
            if (space.kind == SpaceKind::Real) {
                for (std::size_t i = 0; i < w; ++i) {
                    if (wh) gh[i] += weight * r[i] * t[i];
                    if (wr) gr[i] += weight * h[i] * t[i];
                    if (wt) gt[i] += weight * h[i] * r[i];
                }
            } else {
                // s = sum_d (hr*rr - hi*ri)*tr + (hr*ri + hi*rr)*ti
                for (int d = 0; d < space.dim; ++d) {
                    double hr = h[2 * d], hi = h[2 * d + 1];
                    double rr = r[2 * d], ri = r[2 * d + 1];
                    double tr = t[2 * d], ti = t[2 * d + 1];
                    if (wh) {
                        gh[2 * d] += weight * (rr * tr + ri * ti);
                        gh[2 * d + 1] += weight * (-ri * tr + rr * ti);
                    }
                    if (wr) {
                        gr[2 * d] += weight * (hr * tr + hi * ti);
                        gr[2 * d + 1] += weight * (-hi * tr + hr * ti);
                    }
                    if (wt) {
                        gt[2 * d] += weight * (hr * rr - hi * ri);
                        gt[2 * d + 1] += weight * (hr * ri + hi * rr);
                    }
                }
            }
            return;
        }
        case KgeFamily::HadamardRotation: {
            double sq = 0.0;
            for (int d = 0; d < space.dim; ++d) {
                double hr = h[2 * d], hi = h[2 * d + 1];
                double rr = r[2 * d], ri = r[2 * d + 1];
                double dr = hr * rr - hi * ri - t[2 * d];
                double di = hr * ri + hi * rr - t[2 * d + 1];
                sq += dr * dr + di * di;
            }
            double norm = std::sqrt(sq);
            if (norm == 0.0) return;
            for (int d = 0; d < space.dim; ++d) {
                double hr = h[2 * d], hi = h[2 * d + 1];
                double rr = r[2 * d], ri = r[2 * d + 1];
                double dr = hr * rr - hi * ri - t[2 * d];
                double di = hr * ri + hi * rr - t[2 * d + 1];
                double c = -weight / norm;
                if (wh) {
                    gh[2 * d] += c * (dr * rr + di * ri);
                    gh[2 * d + 1] += c * (-dr * ri + di * rr);
                }
                if (wr) {
                    gr[2 * d] += c * (dr * hr + di * hi);
                    gr[2 * d + 1] += c * (-dr * hi + di * hr);
                }
                if (wt) {
                    gt[2 * d] += -c * dr;
                    gt[2 * d + 1] += -c * di;
                }
            }
            return;
        }
    }
    throw ContractError("unknown family");
}

double triple_score(const EmbeddingModel& model, EntityId h, RelationId r, EntityId t) {
    return score_vectors(model.family(), model.space(), model.entity(h), model.relation(r),
                         model.entity(t));
}

double triple_score(const EmbeddingModel& model, EntityId h, std::span<const double> rel,
                    EntityId t) {
    return score_vectors(model.family(), model.space(), model.entity(h), rel, model.entity(t));
}

void EmbeddingModel::save(std::ostream& out) const {
    out.write(kModelMagic, 4);
    io::write_u32(out, kModelFormatVersion);
    io::write_u8(out, static_cast<std::uint8_t>(family_));
    io::write_u8(out, static_cast<std::uint8_t>(space_.kind));
    io::write_u32(out, static_cast<std::uint32_t>(space_.dim));
    io::write_u64(out, entity_count_);
    io::write_u64(out, relation_count_);
    for (double v : entity_data_) io::write_f64(out, v);
    for (double v : relation_data_) io::write_f64(out, v);
    if (!out) throw IoError("failed writing model");
}

EmbeddingModel EmbeddingModel::load(std::istream& in) {
    io::expect_magic(in, kModelMagic, "model checkpoint");
    std::uint32_t version = io::read_u32(in);
    if (version != kModelFormatVersion)
        throw IoError("unsupported model format version " + std::to_string(version));
    KgeFamily family = static_cast<KgeFamily>(io::read_u8(in));
    SpaceKind kind = static_cast<SpaceKind>(io::read_u8(in));
    int dim = static_cast<int>(io::read_u32(in));
    std::size_t n_ent = io::read_u64(in);
    std::size_t n_rel = io::read_u64(in);
    EmbeddingModel m(family, make_space(family, kind, dim), n_ent, n_rel);
    for (double& v : m.entity_data_) v = io::read_f64(in);
    for (double& v : m.relation_data_) v = io::read_f64(in);
    return m;
}

void EmbeddingModel::save_checkpoint(const std::string& path, const KnowledgeGraph& kg) const {
    if (kg.entity_count() != entity_count_ || kg.relation_count() != relation_count_)
        throw ContractError("graph vocabularies do not match the model tables");
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + path);
        save(out);
    }
    std::ofstream sidecar(path + ".vocab");
    if (!sidecar) throw IoError("cannot open for writing: " + path + ".vocab");
    for (std::size_t i = 0; i < kg.entity_count(); ++i)
        sidecar << "e\t" << i << '\t' << kg.entity_name(static_cast<EntityId>(i)) << '\n';
    for (std::size_t i = 0; i < kg.relation_count(); ++i)
        sidecar << "r\t" << i << '\t' << kg.relation_name(static_cast<RelationId>(i)) << '\n';
}

EmbeddingModel EmbeddingModel::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    return load(in);
}

}  // namespace pathqa
