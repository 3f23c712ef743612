#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "pathqa/embedding.hpp"
#include "pathqa/encoder.hpp"
#include "pathqa/kg.hpp"
#include "pathqa/qa_data.hpp"

namespace pathqa {

struct QaTrainConfig {
    int epochs = 100;
    int batch_size = 128;
    double learning_rate = 0.0005;
    double label_smoothing = 0.05;
    int token_dim = 256;
    int hidden_dim = 256;
    std::uint64_t seed = 42;
};

// Gradient of the QA loss w.r.t. encoder parameters; token rows are sparse.
struct EncoderGrad {
    explicit EncoderGrad(const EncoderParams& params)
        : w1(params.w1.size(), 0.0),
          b1(params.b1.size(), 0.0),
          w2(params.w2.size(), 0.0),
          b2(params.b2.size(), 0.0) {}

    std::vector<double> w1, b1, w2, b2;
    std::unordered_map<std::uint32_t, std::vector<double>> token_rows;
};

// Per-question objective: mean over all entities of binary cross-entropy
// between sigmoid(triple_score(topic, q, entity)) and the smoothed answer
// indicator (1-eps)*y + eps/entity_count. Entity/relation tables stay frozen.
double qa_question_loss(const EmbeddingModel& model, const EncoderParams& params,
                        const QuestionRecord& question, double label_smoothing);

// Same forward pass, accumulating weight * d(loss)/d(params) into `grad`.
// Returns the loss.
double qa_question_loss_grad(const EmbeddingModel& model, const EncoderParams& params,
                             const QuestionRecord& question, double label_smoothing,
                             double weight, EncoderGrad& grad);

// Vocabulary (first-appearance order, row 0 = <unk>) plus seeded random
// tables; train_qa with epochs = 0 returns exactly this.
EncoderParams initial_encoder(const EmbeddingModel& model, std::span<const QuestionRecord> train,
                              const QaTrainConfig& config);

// Top-scoring entity under pure triple scoring, smallest id on ties.
EntityId no_path_prediction(const EmbeddingModel& model, EntityId topic,
                            std::span<const double> q);

struct QaTrainResult {
    EncoderParams encoder;
    double best_valid_hits = 0.0;  // percentage, no-path scoring
    int best_epoch = -1;           // -1 when nothing was trained
    double last_epoch_loss = 0.0;
};

// Minibatch SGD against frozen embeddings; snapshots the epoch with the best
// validation Hits@1 (no-path scoring) and returns that snapshot. Deterministic
// given the seed; throws TrainingDiverged on a non-finite batch loss.
QaTrainResult train_qa(const KnowledgeGraph& kg, const EmbeddingModel& model,
                       std::span<const QuestionRecord> train,
                       std::span<const QuestionRecord> valid, const QaTrainConfig& config,
                       int threads = 0);

}  // namespace pathqa
