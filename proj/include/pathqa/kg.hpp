#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pathqa/errors.hpp"

namespace pathqa {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

// Relations are stored inverse-augmented: the k-th distinct relation string in
// the source gets id 2k and its inverse 2k+1, so the involution is a bit flip.
inline RelationId inverse(RelationId r) { return r ^ 1u; }
inline bool is_inverse_relation(RelationId r) { return (r & 1u) != 0; }

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;
    auto operator<=>(const Triple&) const = default;
};

struct Edge {
    RelationId relation = 0;
    EntityId entity = 0;
    auto operator<=>(const Edge&) const = default;
};

// Binary graph-file schema version (bumped on incompatible layout changes).
inline constexpr std::uint8_t kGraphFormatVersion = 1;

// Immutable after construction; any number of concurrent readers is safe.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    // Vocabularies are taken as-is (relation_names must already contain the
    // inverse entries at odd ids); triples are deduplicated preserving first
    // appearance.
    static KnowledgeGraph build(std::vector<std::string> entity_names,
                                std::vector<std::string> relation_names,
                                std::vector<Triple> triples);

    std::size_t entity_count() const { return entity_names_.size(); }
    std::size_t relation_count() const { return relation_names_.size(); }
    std::size_t triple_count() const { return triples_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    const std::vector<Triple>& triples() const { return triples_; }

    // Outgoing edges (inverse edges included), sorted by (relation, entity).
    std::span<const Edge> neighbors(EntityId e) const;

    const std::string& entity_name(EntityId e) const;
    const std::string& relation_name(RelationId r) const;
    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }

    std::optional<EntityId> find_entity(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;

    // Keeps floor(N/2) triples chosen uniformly without replacement; the
    // vocabularies are preserved unchanged, so entities may become isolated.
    KnowledgeGraph subsample_half(std::uint64_t seed) const;

    void save(std::ostream& out) const;
    static KnowledgeGraph load(std::istream& in);
    void save_file(const std::string& path) const;
    static KnowledgeGraph load_file(const std::string& path);

private:
    void build_adjacency();

    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;  // post-augmentation, 2x source relations
    std::unordered_map<std::string, EntityId> entity_index_;
    std::unordered_map<std::string, RelationId> relation_index_;
    std::vector<Triple> triples_;
    std::vector<std::uint64_t> offsets_;  // CSR over edges_, entity_count()+1 entries
    std::vector<Edge> edges_;
};

// Parses `head|relation|tail` lines, trims fields, assigns vocabulary ids in
// first-appearance order and augments with inverse relations.
KnowledgeGraph load_kb(std::istream& in);
KnowledgeGraph load_kb_file(const std::string& path);

inline constexpr std::string_view kInverseSuffix = "^-1";

}  // namespace pathqa
