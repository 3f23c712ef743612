#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pathqa/embedding.hpp"
#include "pathqa/encoder.hpp"
#include "pathqa/kg.hpp"
#include "pathqa/paths.hpp"
#include "pathqa/qa_data.hpp"

namespace pathqa {

// Which path represents a candidate when several shortest paths exist.
enum class PathPolicy {
    LexicographicFirst,  // first path in the enumerator's lexicographic order
    MaxCorrelation,      // the path whose correlation with the question is highest
};

enum class ScoreMode {
    Full,         // triple score + alpha * tanh(cos(q, p))
    NoPath,       // triple score only; the path machinery is never consulted
    SigmoidPath,  // sigmoid instead of tanh (loses the sign of the correlation)
};

const char* to_string(PathPolicy policy);
const char* to_string(ScoreMode mode);

struct AnswerConfig {
    double alpha = 0.1;
    int max_hops = 3;
    std::size_t path_cap = 16;
    PathPolicy path_policy = PathPolicy::LexicographicFirst;
    ScoreMode mode = ScoreMode::Full;
};

struct ScoredCandidate {
    EntityId entity = 0;
    double triple_score = 0.0;
    double path_term = 0.0;  // raw correlation term, before the alpha weight
    double total = 0.0;
    std::optional<RelationPath> explanation;
};

// Signed correlation between a question vector and a path embedding, both laid
// out as stored reals (complex pairs flattened). Full mode squashes the cosine
// through tanh so the term stays in [-tanh(1), tanh(1)] and keeps its sign;
// SigmoidPath maps it into (0, 1); NoPath is identically zero.
double ambipolar_term(std::span<const double> q, std::span<const double> p, ScoreMode mode);

// Largest magnitude ambipolar_term can reach in the given mode. Used for the
// pruning threshold in answer_question.
double path_term_bound(ScoreMode mode);

// Scores one candidate: triple score with q standing in for the relation, plus
// the weighted correlation of the policy-selected path. Candidates without
// paths keep a zero path term, the neutral value.
ScoredCandidate combined_score(const EmbeddingModel& model, EntityId head,
                               std::span<const double> q, EntityId answer,
                               const std::vector<RelationPath>& paths,
                               const AnswerConfig& config);

// Ranks every entity for the encoded question vector q with topic as the path
// source. Path extraction only runs for candidates whose triple score is within
// 2 * alpha * bound of the best one; anything below that cannot alter the
// argmax, so the pruned ranking's winner matches the exhaustive one.
std::vector<ScoredCandidate> rank_candidates(const KnowledgeGraph& kg, const EmbeddingModel& model,
                                             std::span<const double> q, EntityId topic,
                                             const AnswerConfig& config, int threads = 0);

// Encodes the question and ranks all entities; the returned list is sorted by
// total descending with ascending-id tie-breaks, so front() is the prediction.
std::vector<ScoredCandidate> answer_question(const KnowledgeGraph& kg, const EmbeddingModel& model,
                                             const EncoderParams& encoder,
                                             const QuestionRecord& question,
                                             const AnswerConfig& config, int threads = 0);

}  // namespace pathqa
