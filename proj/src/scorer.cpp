#include "pathqa/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "pathqa/errors.hpp"
#include "pathqa/parallel.hpp"

namespace pathqa {

const char* to_string(PathPolicy policy) {
    switch (policy) {
        case PathPolicy::LexicographicFirst: return "lex-first";
        case PathPolicy::MaxCorrelation: return "max-correlation";
    }
    throw ContractError("unknown path policy");
}

const char* to_string(ScoreMode mode) {
    switch (mode) {
        case ScoreMode::Full: return "full";
        case ScoreMode::NoPath: return "no-path";
        case ScoreMode::SigmoidPath: return "sigmoid-path";
    }
    throw ContractError("unknown score mode");
}

double ambipolar_term(std::span<const double> q, std::span<const double> p, ScoreMode mode) {
    if (mode == ScoreMode::NoPath) return 0.0;
    if (q.size() != p.size())
        throw ContractError("question and path vectors have different widths");
    double dot = 0.0, nq = 0.0, np = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        dot += q[i] * p[i];
        nq += q[i] * q[i];
        np += p[i] * p[i];
    }
    if (nq == 0.0 || np == 0.0)
        throw ContractError("cosine correlation needs nonzero vectors");
    const double cosine = dot / (std::sqrt(nq) * std::sqrt(np));
    if (mode == ScoreMode::SigmoidPath) return 1.0 / (1.0 + std::exp(-cosine));
    return std::tanh(cosine);
}

double path_term_bound(ScoreMode mode) {
    switch (mode) {
        case ScoreMode::Full: return std::tanh(1.0);
        case ScoreMode::NoPath: return 0.0;
        case ScoreMode::SigmoidPath: return 1.0;
    }
    throw ContractError("unknown score mode");
}

namespace {

void validate_config(const AnswerConfig& config) {
    if (config.alpha < 0.0) throw ContractError("alpha must be >= 0");
    if (config.max_hops < 1) throw ContractError("max_hops must be >= 1");
    if (config.path_cap < 1) throw ContractError("path_cap must be >= 1");
}

}  // namespace

ScoredCandidate combined_score(const EmbeddingModel& model, EntityId head,
                               std::span<const double> q, EntityId answer,
                               const std::vector<RelationPath>& paths,
                               const AnswerConfig& config) {
    validate_config(config);
    ScoredCandidate candidate;
    candidate.entity = answer;
    candidate.triple_score = triple_score(model, head, q, answer);
    if (!paths.empty() && config.mode != ScoreMode::NoPath) {
        std::size_t pick = 0;
        double term = ambipolar_term(q, path_embedding(model, paths[0]), config.mode);
        if (config.path_policy == PathPolicy::MaxCorrelation) {
            for (std::size_t i = 1; i < paths.size(); ++i) {
                const double t = ambipolar_term(q, path_embedding(model, paths[i]), config.mode);
                if (t > term) {
                    term = t;
                    pick = i;
                }
            }
        }
        candidate.path_term = term;
        candidate.explanation = paths[pick];
    }
    candidate.total = candidate.triple_score + config.alpha * candidate.path_term;
    return candidate;
}

std::vector<ScoredCandidate> rank_candidates(const KnowledgeGraph& kg, const EmbeddingModel& model,
                                             std::span<const double> q, EntityId topic,
                                             const AnswerConfig& config, int threads) {
    validate_config(config);
    if (topic >= kg.entity_count()) throw ContractError("topic entity out of range");
    if (model.entity_count() != kg.entity_count() ||
        model.relation_count() != kg.relation_count())
        throw ContractError("model and graph vocabularies disagree");
    if (q.size() != model.space().real_width())
        throw ContractError("question vector width does not match the model");

    const std::size_t n = kg.entity_count();
    std::vector<ScoredCandidate> out(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            out[e].entity = static_cast<EntityId>(e);
            out[e].triple_score = triple_score(model, topic, q, static_cast<EntityId>(e));
            out[e].total = out[e].triple_score;
        }
    });

    if (config.mode != ScoreMode::NoPath) {
        double max_ts = out[0].triple_score;
        for (const auto& c : out) max_ts = std::max(max_ts, c.triple_score);
        // Anything below can gain at most alpha*bound while the leader loses at
        // most the same, so the argmax cannot move: pruning is exact.
        const double threshold = max_ts - 2.0 * config.alpha * path_term_bound(config.mode);
        parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t e = begin; e < end; ++e) {
                if (out[e].triple_score < threshold) continue;
                const auto paths =
                    shortest_relation_paths(kg, topic, static_cast<EntityId>(e),
                                            config.max_hops, config.path_cap);
                if (paths.empty()) continue;
                out[e] = combined_score(model, topic, q, static_cast<EntityId>(e), paths, config);
            }
        });
    }

    std::sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.total != b.total) return a.total > b.total;
        return a.entity < b.entity;
    });
    return out;
}

std::vector<ScoredCandidate> answer_question(const KnowledgeGraph& kg, const EmbeddingModel& model,
                                             const EncoderParams& encoder,
                                             const QuestionRecord& question,
                                             const AnswerConfig& config, int threads) {
    const auto q = encode_question(encoder, question.tokens);
    return rank_candidates(kg, model, q, question.topic, config, threads);
}

}  // namespace pathqa
