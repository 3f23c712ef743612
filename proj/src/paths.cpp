#include "pathqa/paths.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>

#include "pathqa/errors.hpp"

namespace pathqa {

namespace {

constexpr std::uint32_t kUnreached = std::numeric_limits<std::uint32_t>::max();

// Hop distance from every entity to `target`. The adjacency is symmetric
// (every edge has its inverse twin), so one BFS from the target suffices.
std::vector<std::uint32_t> distances_to(const KnowledgeGraph& kg, EntityId target,
                                        std::uint32_t limit) {
    std::vector<std::uint32_t> dist(kg.entity_count(), kUnreached);
    dist[target] = 0;
    std::deque<EntityId> queue{target};
    while (!queue.empty()) {
        const EntityId u = queue.front();
        queue.pop_front();
        if (dist[u] >= limit) continue;
        for (const Edge& e : kg.neighbors(u)) {
            if (dist[e.entity] == kUnreached) {
                dist[e.entity] = dist[u] + 1;
                queue.push_back(e.entity);
            }
        }
    }
    return dist;
}

// DFS over (relation prefix, frontier) states. The frontier holds every
// entity reachable from the source via the prefix that can still finish in
// the remaining hops; relations are tried in ascending id order, so complete
// sequences appear in lexicographic order.
struct Enumerator {
    const KnowledgeGraph& kg;
    const std::vector<std::uint32_t>& dist;
    std::uint32_t length;
    std::size_t cap;
    std::vector<RelationId> prefix;
    std::vector<std::vector<RelationId>> out;

    bool emit_from(const std::vector<EntityId>& frontier, std::uint32_t depth) {
        if (depth == length) {
            out.push_back(prefix);
            return out.size() < cap;
        }
        const std::uint32_t remaining = length - depth - 1;
        std::vector<RelationId> options;
        for (const EntityId u : frontier)
            for (const Edge& e : kg.neighbors(u))
                if (dist[e.entity] == remaining) options.push_back(e.relation);
        std::sort(options.begin(), options.end());
        options.erase(std::unique(options.begin(), options.end()), options.end());

        for (const RelationId r : options) {
            std::vector<EntityId> next;
            for (const EntityId u : frontier) {
                const auto edges = kg.neighbors(u);
                // neighbors are (relation, entity)-sorted: scan the r-block
                auto it = std::lower_bound(edges.begin(), edges.end(), Edge{r, 0});
                for (; it != edges.end() && it->relation == r; ++it)
                    if (dist[it->entity] == remaining) next.push_back(it->entity);
            }
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end()), next.end());
            if (next.empty()) continue;
            prefix.push_back(r);
            const bool keep_going = emit_from(next, depth + 1);
            prefix.pop_back();
            if (!keep_going) return false;
        }
        return true;
    }
};

}  // namespace

std::vector<RelationPath> shortest_relation_paths(const KnowledgeGraph& kg, EntityId source,
                                                  EntityId target, int max_hops, int cap) {
    if (source >= kg.entity_count() || target >= kg.entity_count())
        throw ContractError("shortest_relation_paths: entity id out of range");
    if (max_hops < 1) throw ContractError("shortest_relation_paths: max_hops must be >= 1");
    if (cap < 1) throw ContractError("shortest_relation_paths: cap must be >= 1");
    if (source == target) return {};

    const auto dist = distances_to(kg, target, static_cast<std::uint32_t>(max_hops));
    const std::uint32_t length = dist[source];
    if (length == kUnreached || length > static_cast<std::uint32_t>(max_hops)) return {};

    Enumerator walker{kg, dist, length, static_cast<std::size_t>(cap), {}, {}};
    walker.prefix.reserve(length);
    walker.emit_from({source}, 0);

    std::vector<RelationPath> paths;
    paths.reserve(walker.out.size());
    for (auto& relations : walker.out)
        paths.push_back(RelationPath{std::move(relations), source, target});
    return paths;
}

PathEmbedding path_embedding(const EmbeddingModel& model, const RelationPath& path) {
    if (path.relations.empty()) throw ContractError("path_embedding: empty path");
    for (const RelationId r : path.relations)
        if (r >= model.relation_count())
            throw ContractError("path_embedding: relation id out of range");

    const auto width = static_cast<std::size_t>(model.width());
    PathEmbedding p(model.relation(path.relations[0]).begin(),
                    model.relation(path.relations[0]).end());
    for (std::size_t i = 1; i < path.relations.size(); ++i) {
        const auto r = model.relation(path.relations[i]);
        if (model.family() == KgeFamily::Additive) {
            for (std::size_t d = 0; d < width; ++d) p[d] += r[d];
        } else if (model.space().kind == SpaceKind::Real) {
            for (std::size_t d = 0; d < width; ++d) p[d] *= r[d];
        } else {
            for (std::size_t d = 0; d + 1 < width; d += 2) {
                const double re = p[d] * r[d] - p[d + 1] * r[d + 1];
                const double im = p[d] * r[d + 1] + p[d + 1] * r[d];
                p[d] = re;
                p[d + 1] = im;
            }
        }
    }
    return p;
}

std::vector<EntityId> realize_path(const KnowledgeGraph& kg, const RelationPath& path) {
    const std::size_t n = path.relations.size();
    if (n == 0) throw ContractError("realize_path: empty path");
    if (path.source >= kg.entity_count() || path.target >= kg.entity_count())
        throw ContractError("realize_path: entity id out of range");
    for (const RelationId r : path.relations)
        if (r >= kg.relation_count()) throw ContractError("realize_path: relation id out of range");

    // feasible[d] = entities that can still complete hops d..n-1 to the target
    std::vector<std::vector<bool>> feasible(n + 1,
                                            std::vector<bool>(kg.entity_count(), false));
    feasible[n][path.target] = true;
    for (std::size_t d = n; d-- > 0;) {
        const RelationId r = path.relations[d];
        for (EntityId u = 0; u < kg.entity_count(); ++u) {
            const auto edges = kg.neighbors(u);
            auto it = std::lower_bound(edges.begin(), edges.end(), Edge{r, 0});
            for (; it != edges.end() && it->relation == r; ++it) {
                if (feasible[d + 1][it->entity]) {
                    feasible[d][u] = true;
                    break;
                }
            }
        }
    }
    if (!feasible[0][path.source])
        throw ContractError("realize_path: path is not realizable from its source");

    std::vector<EntityId> chain{path.source};
    EntityId u = path.source;
    for (std::size_t d = 0; d < n; ++d) {
        const RelationId r = path.relations[d];
        const auto edges = kg.neighbors(u);
        auto it = std::lower_bound(edges.begin(), edges.end(), Edge{r, 0});
        EntityId chosen = 0;
        bool found = false;
        for (; it != edges.end() && it->relation == r; ++it) {
            if (feasible[d + 1][it->entity]) {  // edges sorted: first hit is smallest
                chosen = it->entity;
                found = true;
                break;
            }
        }
        if (!found) throw ContractError("realize_path: dead end");  // unreachable by feasibility
        chain.push_back(chosen);
        u = chosen;
    }
    return chain;
}

std::string render_relation_chain(const KnowledgeGraph& kg,
                                  const std::vector<RelationId>& relations) {
    std::string out;
    for (std::size_t i = 0; i < relations.size(); ++i) {
        if (i > 0) out += " -> ";
        out += kg.relation_name(relations[i]);
    }
    return out;
}

std::string render_explanation(const KnowledgeGraph& kg, const RelationPath& path) {
    const auto chain = realize_path(kg, path);
    std::string out = kg.entity_name(chain[0]);
    for (std::size_t i = 0; i < path.relations.size(); ++i) {
        out += " --" + kg.relation_name(path.relations[i]) + "--> ";
        out += kg.entity_name(chain[i + 1]);
    }
    return out;
}

}  // namespace pathqa
