#pragma once

#include <string>
#include <vector>

#include "pathqa/embedding.hpp"
#include "pathqa/kg.hpp"

namespace pathqa {

// An ordered relation sequence realizable hop-by-hop in the inverse-augmented
// adjacency, so every hop is forward-direction.
struct RelationPath {
    std::vector<RelationId> relations;
    EntityId source = 0;
    EntityId target = 0;
    auto operator<=>(const RelationPath&) const = default;
};

// Lives in the relation-embedding space of the model that produced it.
using PathEmbedding = std::vector<double>;

// All distinct relation sequences of minimal length L <= max_hops from source
// to target, in lexicographic relation-id order, at most `cap` of them. Empty
// when source == target or no connection within max_hops exists.
std::vector<RelationPath> shortest_relation_paths(const KnowledgeGraph& kg, EntityId source,
                                                  EntityId target, int max_hops, int cap);

// Composes the path's relation embeddings:
//   Additive          p = sum_i r_i
//   Multiplicative    p = prod_i r_i   (componentwise; complex product in complex space)
//   HadamardRotation  p = r_1 o ... o r_n (componentwise complex product)
PathEmbedding path_embedding(const EmbeddingModel& model, const RelationPath& path);

// Lexicographically smallest entity chain (length n+1) realizing the path.
std::vector<EntityId> realize_path(const KnowledgeGraph& kg, const RelationPath& path);

// "starred_actors^-1 → directed_by" style rendering.
std::string render_relation_chain(const KnowledgeGraph& kg,
                                  const std::vector<RelationId>& relations);

// "Topic --rel1--> X --rel2--> Answer" rendering over the realized chain.
std::string render_explanation(const KnowledgeGraph& kg, const RelationPath& path);

}  // namespace pathqa
