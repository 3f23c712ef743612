#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pathqa/errors.hpp"
#include "pathqa/kg.hpp"
#include "pathqa/rng.hpp"

namespace pathqa {

enum class SpaceKind : std::uint8_t { Real = 0, Complex = 1 };

// Score-function families: translation, trilinear product, complex rotation.
enum class KgeFamily : std::uint8_t { Additive = 0, Multiplicative = 1, HadamardRotation = 2 };

const char* to_string(SpaceKind k);
const char* to_string(KgeFamily f);

// Model checkpoint schema version.
inline constexpr std::uint32_t kModelFormatVersion = 1;

// dim counts components; a Complex component is one (re, im) pair, stored
// interleaved, so a Complex vector holds 2*dim reals.
struct EmbeddingSpace {
    SpaceKind kind = SpaceKind::Real;
    int dim = 0;

    int real_width() const { return kind == SpaceKind::Complex ? 2 * dim : dim; }
    bool operator==(const EmbeddingSpace&) const = default;
};

// Throws ContractError on invalid (family, kind) combinations: Additive needs
// Real space, HadamardRotation needs Complex.
EmbeddingSpace make_space(KgeFamily family, SpaceKind kind, int dim);

class EmbeddingModel {
public:
    EmbeddingModel() = default;
    EmbeddingModel(KgeFamily family, EmbeddingSpace space, std::size_t entity_count,
                   std::size_t relation_count);

    // Uniform init in [-0.5/sqrt(dim), 0.5/sqrt(dim)] per real coordinate;
    // HadamardRotation relation rows are unit phases with uniform angle.
    static EmbeddingModel random_init(KgeFamily family, EmbeddingSpace space,
                                      std::size_t entity_count, std::size_t relation_count,
                                      Rng& rng);

    KgeFamily family() const { return family_; }
    const EmbeddingSpace& space() const { return space_; }
    std::size_t entity_count() const { return entity_count_; }
    std::size_t relation_count() const { return relation_count_; }
    int width() const { return space_.real_width(); }

    std::span<double> entity(EntityId e);
    std::span<const double> entity(EntityId e) const;
    std::span<double> relation(RelationId r);
    std::span<const double> relation(RelationId r) const;

    const std::vector<double>& entity_data() const { return entity_data_; }
    const std::vector<double>& relation_data() const { return relation_data_; }

    // Projects one relation row back onto unit modulus per complex component.
    void renormalize_relation(RelationId r);

    void save(std::ostream& out) const;
    static EmbeddingModel load(std::istream& in);
    // Binary checkpoint plus a `<path>.vocab` text sidecar with the id-to-name maps.
    void save_checkpoint(const std::string& path, const KnowledgeGraph& kg) const;
    static EmbeddingModel load_checkpoint(const std::string& path);

private:
    KgeFamily family_ = KgeFamily::Additive;
    EmbeddingSpace space_;
    std::size_t entity_count_ = 0;
    std::size_t relation_count_ = 0;
    std::vector<double> entity_data_;
    std::vector<double> relation_data_;
};

// Family score on raw vectors of the model's real width. Higher is more
// plausible for every family:
//   Additive             -||h + r - t||_2
//   Multiplicative real  sum_d h_d r_d t_d
//   Multiplicative cplx  Re(sum_d h_d r_d conj(t_d))
//   HadamardRotation     -||h o r - t||_2   (componentwise complex product)
double score_vectors(KgeFamily family, const EmbeddingSpace& space, std::span<const double> h,
                     std::span<const double> r, std::span<const double> t);

// Accumulates weight * d(score)/d(h|r|t) into any non-empty output spans.
void score_grad_vectors(KgeFamily family, const EmbeddingSpace& space, std::span<const double> h,
                        std::span<const double> r, std::span<const double> t, double weight,
                        std::span<double> gh, std::span<double> gr, std::span<double> gt);

double triple_score(const EmbeddingModel& model, EntityId h, RelationId r, EntityId t);
// The relation slot as a raw vector; this is how the question embedding is
// scored in place of a relation.
double triple_score(const EmbeddingModel& model, EntityId h, std::span<const double> rel,
                    EntityId t);

}  // namespace pathqa
