#pragma once

#include <cstdint>
#include <vector>

#include "pathqa/embedding.hpp"
#include "pathqa/kg.hpp"

namespace pathqa {

struct KgeTrainConfig {
    int dim = 200;
    int epochs = 100;
    int batch_size = 128;
    double learning_rate = 0.0005;
    int negatives_per_positive = 10;
    double margin = 6.0;  // Additive / HadamardRotation; unused for Multiplicative
    SpaceKind multiplicative_space = SpaceKind::Complex;
    std::uint64_t seed = 42;
};

struct KgeTrainResult {
    EmbeddingModel model;
    // Diagnostic on the floor(5%) split excluded from training: mean score of
    // the held-out observed triples vs. their uniform corruptions. Graphs
    // below 20 triples have no such split (heldout_count == 0) and the means
    // are measured in-sample over all triples instead.
    double heldout_observed_mean = 0.0;
    double heldout_corrupted_mean = 0.0;
    std::size_t heldout_count = 0;
    double last_epoch_loss = 0.0;

    double heldout_gap() const { return heldout_observed_mean - heldout_corrupted_mean; }
};

// Pairwise training loss:
//   Additive / HadamardRotation:  max(0, margin - s+ + s-)
//   Multiplicative:               softplus(-s+) + softplus(s-)
double kge_pair_loss(const EmbeddingModel& model, const Triple& positive, const Triple& negative,
                     double margin);

// One touched embedding row of a loss gradient.
struct ParamGrad {
    bool is_entity = true;
    std::uint32_t row = 0;
    std::vector<double> grad;
};

// Gradient of kge_pair_loss w.r.t. every embedding row it touches (at most
// the 5 distinct rows of the two triples when they share the relation).
std::vector<ParamGrad> kge_gradient(const EmbeddingModel& model, const Triple& positive,
                                    const Triple& negative, double margin);

// The seeded random starting point train_kge departs from; train_kge with
// epochs = 0 returns exactly this model.
EmbeddingModel initial_kge_model(const KnowledgeGraph& kg, KgeFamily family,
                                 const KgeTrainConfig& config);

// Minibatch SGD with uniform head-or-tail corruption. Deterministic given the
// seed; throws TrainingDiverged on a non-finite batch loss. HadamardRotation
// relation rows are re-normalized to unit modulus after every update. Trains
// on both directions of each kept triple (the inverse relation rows need
// gradient too); a 5% split is held out of training in both directions.
KgeTrainResult train_kge(const KnowledgeGraph& kg, KgeFamily family, const KgeTrainConfig& config);

struct LinkPredictionMetrics {
    double hits_at_1 = 0.0;
    double hits_at_10 = 0.0;
    double mrr = 0.0;
    std::size_t test_count = 0;
};

// Filtered tail ranking: every entity competes for the tail slot, with other
// known-true tails (from `all`) removed before computing the rank.
LinkPredictionMetrics link_prediction_eval(const EmbeddingModel& model,
                                           std::span<const Triple> test,
                                           std::span<const Triple> all, int threads = 0);

}  // namespace pathqa
