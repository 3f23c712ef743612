#include "pathqa/qa_train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pathqa/errors.hpp"
#include "pathqa/parallel.hpp"
#include "pathqa/rng.hpp"

namespace pathqa {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double z = std::exp(x);
    return z / (1.0 + z);
}

void validate_config(const QaTrainConfig& config) {
    if (config.epochs < 0) throw ContractError("train_qa: epochs must be non-negative");
    if (config.batch_size <= 0) throw ContractError("train_qa: batch_size must be positive");
    if (!(config.learning_rate > 0.0))
        throw ContractError("train_qa: learning_rate must be positive");
    if (config.label_smoothing < 0.0 || config.label_smoothing >= 1.0)
        throw ContractError("train_qa: label_smoothing must be in [0, 1)");
    if (config.token_dim <= 0 || config.hidden_dim <= 0)
        throw ContractError("train_qa: encoder widths must be positive");
}

void validate_records(const EmbeddingModel& model, std::span<const QuestionRecord> records,
                      const char* what) {
    for (const auto& r : records) {
        if (r.topic >= model.entity_count())
            throw ContractError(std::string("train_qa: ") + what + " topic id out of range");
        for (const EntityId a : r.answers)
            if (a >= model.entity_count())
                throw ContractError(std::string("train_qa: ") + what + " answer id out of range");
        if (r.tokens.empty())
            throw ContractError(std::string("train_qa: ") + what + " question has no tokens");
    }
}

// Forward pass keeping every intermediate needed for backprop.
struct Forward {
    std::vector<double> pooled;  // mean token embedding
    std::vector<double> hidden;  // tanh layer output
    std::vector<double> q_raw;   // pre-normalization output
    std::vector<double> q;       // what scoring sees
};

Forward run_forward(const EncoderParams& params, const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw ContractError("qa loss: empty token list");
    const auto token_dim = static_cast<std::size_t>(params.token_dim);
    const auto hidden_dim = static_cast<std::size_t>(params.hidden_dim);
    const auto width = static_cast<std::size_t>(params.output_width);

    Forward f;
    f.pooled.assign(token_dim, 0.0);
    for (const auto& token : tokens) {
        const double* row = params.token_table.data() + params.token_row(token) * token_dim;
        for (std::size_t d = 0; d < token_dim; ++d) f.pooled[d] += row[d];
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (double& v : f.pooled) v *= inv;

    f.hidden.resize(hidden_dim);
    for (std::size_t i = 0; i < hidden_dim; ++i) {
        double acc = params.b1[i];
        const double* row = params.w1.data() + i * token_dim;
        for (std::size_t d = 0; d < token_dim; ++d) acc += row[d] * f.pooled[d];
        f.hidden[i] = std::tanh(acc);
    }

    f.q_raw.resize(width);
    for (std::size_t i = 0; i < width; ++i) {
        double acc = params.b2[i];
        const double* row = params.w2.data() + i * hidden_dim;
        for (std::size_t d = 0; d < hidden_dim; ++d) acc += row[d] * f.hidden[d];
        f.q_raw[i] = acc;
    }

    f.q = f.q_raw;
    if (params.unit_modulus_output) {
        for (std::size_t d = 0; d + 1 < width; d += 2) {
            const double norm = std::hypot(f.q[d], f.q[d + 1]);
            if (norm > 0.0) {
                f.q[d] /= norm;
                f.q[d + 1] /= norm;
            } else {
                f.q[d] = 1.0;
                f.q[d + 1] = 0.0;
            }
        }
    }
    return f;
}

// Loss over all entities plus (optionally) d(loss)/dq.
double scores_pass(const EmbeddingModel& model, const QuestionRecord& question,
                   std::span<const double> q, double label_smoothing, std::vector<double>* gq) {
    const std::size_t entities = model.entity_count();
    std::vector<EntityId> answers(question.answers.begin(), question.answers.end());
    std::sort(answers.begin(), answers.end());

    const double uniform = label_smoothing / static_cast<double>(entities);
    const double inv_e = 1.0 / static_cast<double>(entities);
    double loss = 0.0;
    for (EntityId e = 0; e < entities; ++e) {
        const double s =
            score_vectors(model.family(), model.space(), model.entity(question.topic), q,
                          model.entity(e));
        const double y = std::binary_search(answers.begin(), answers.end(), e) ? 1.0 : 0.0;
        const double smoothed = (1.0 - label_smoothing) * y + uniform;
        loss += softplus(s) - smoothed * s;
        if (gq) {
            const double w = (sigmoid(s) - smoothed) * inv_e;
            score_grad_vectors(model.family(), model.space(), model.entity(question.topic), q,
                               model.entity(e), w, {}, *gq, {});
        }
    }
    return loss * inv_e;
}

}  // namespace

double qa_question_loss(const EmbeddingModel& model, const EncoderParams& params,
                        const QuestionRecord& question, double label_smoothing) {
    const Forward f = run_forward(params, question.tokens);
    return scores_pass(model, question, f.q, label_smoothing, nullptr);
}

double qa_question_loss_grad(const EmbeddingModel& model, const EncoderParams& params,
                             const QuestionRecord& question, double label_smoothing,
                             double weight, EncoderGrad& grad) {
    const auto token_dim = static_cast<std::size_t>(params.token_dim);
    const auto hidden_dim = static_cast<std::size_t>(params.hidden_dim);
    const auto width = static_cast<std::size_t>(params.output_width);

    const Forward f = run_forward(params, question.tokens);
    std::vector<double> gq(width, 0.0);
    const double loss = scores_pass(model, question, f.q, label_smoothing, &gq);
    for (double& v : gq) v *= weight;

    // through the unit-modulus projection (identity when disabled)
    std::vector<double> gq_raw;
    if (params.unit_modulus_output) {
        gq_raw.assign(width, 0.0);
        for (std::size_t d = 0; d + 1 < width; d += 2) {
            const double x = f.q_raw[d];
            const double y = f.q_raw[d + 1];
            const double norm = std::hypot(x, y);
            if (norm > 0.0) {
                const double n3 = norm * norm * norm;
                gq_raw[d] = (y * y * gq[d] - x * y * gq[d + 1]) / n3;
                gq_raw[d + 1] = (-x * y * gq[d] + x * x * gq[d + 1]) / n3;
            }  // zero pair: output pinned to (1,0), no gradient
        }
    } else {
        gq_raw = std::move(gq);
    }

    // output affine layer
    std::vector<double> gh(hidden_dim, 0.0);
    for (std::size_t i = 0; i < width; ++i) {
        grad.b2[i] += gq_raw[i];
        const double* w2_row = params.w2.data() + i * hidden_dim;
        double* gw2_row = grad.w2.data() + i * hidden_dim;
        for (std::size_t d = 0; d < hidden_dim; ++d) {
            gw2_row[d] += gq_raw[i] * f.hidden[d];
            gh[d] += gq_raw[i] * w2_row[d];
        }
    }

    // tanh layer
    std::vector<double> gx(token_dim, 0.0);
    for (std::size_t i = 0; i < hidden_dim; ++i) {
        const double ga = gh[i] * (1.0 - f.hidden[i] * f.hidden[i]);
        grad.b1[i] += ga;
        const double* w1_row = params.w1.data() + i * token_dim;
        double* gw1_row = grad.w1.data() + i * token_dim;
        for (std::size_t d = 0; d < token_dim; ++d) {
            gw1_row[d] += ga * f.pooled[d];
            gx[d] += ga * w1_row[d];
        }
    }

    // mean pooling spreads the gradient over every token occurrence
    const double inv = 1.0 / static_cast<double>(question.tokens.size());
    for (const auto& token : question.tokens) {
        auto& row = grad.token_rows[params.token_row(token)];
        if (row.empty()) row.assign(token_dim, 0.0);
        for (std::size_t d = 0; d < token_dim; ++d) row[d] += gx[d] * inv;
    }
    return loss;
}

EncoderParams initial_encoder(const EmbeddingModel& model, std::span<const QuestionRecord> train,
                              const QaTrainConfig& config) {
    validate_config(config);
    EncoderParams params;
    params.token_dim = config.token_dim;
    params.hidden_dim = config.hidden_dim;
    params.output_width = model.width();
    params.unit_modulus_output = model.family() == KgeFamily::HadamardRotation;

    params.vocab.emplace_back(kUnkToken);
    params.index.emplace(std::string(kUnkToken), 0u);
    for (const auto& record : train)
        for (const auto& token : record.tokens)
            if (params.index.emplace(token, static_cast<std::uint32_t>(params.vocab.size())).second)
                params.vocab.push_back(token);

    Rng rng(derive_seed(config.seed, "qa/init"));
    const auto fill = [&rng](std::vector<double>& block, std::size_t n, double scale) {
        block.resize(n);
        for (auto& v : block) v = rng.uniform(-scale, scale);
    };
    const auto token_dim = static_cast<std::size_t>(config.token_dim);
    const auto hidden_dim = static_cast<std::size_t>(config.hidden_dim);
    const auto width = static_cast<std::size_t>(params.output_width);
    fill(params.token_table, params.vocab.size() * token_dim, 0.5 / std::sqrt(double(token_dim)));
    fill(params.w1, hidden_dim * token_dim, 1.0 / std::sqrt(double(token_dim)));
    params.b1.assign(hidden_dim, 0.0);
    fill(params.w2, width * hidden_dim, 1.0 / std::sqrt(double(hidden_dim)));
    params.b2.assign(width, 0.0);
    return params;
}

EntityId no_path_prediction(const EmbeddingModel& model, EntityId topic,
                            std::span<const double> q) {
    EntityId best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (EntityId e = 0; e < model.entity_count(); ++e) {
        const double s =
            score_vectors(model.family(), model.space(), model.entity(topic), q, model.entity(e));
        if (s > best_score) {  // strict: ties keep the smaller id
            best_score = s;
            best = e;
        }
    }
    return best;
}

namespace {

double validation_hits(const EmbeddingModel& model, const EncoderParams& params,
                       std::span<const QuestionRecord> valid, int threads) {
    if (valid.empty()) return 0.0;
    std::vector<std::uint8_t> hit(valid.size(), 0);
    parallel_for(valid.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto q = encode_question(params, valid[i].tokens);
            const EntityId pred = no_path_prediction(model, valid[i].topic, q);
            hit[i] = std::find(valid[i].answers.begin(), valid[i].answers.end(), pred) !=
                             valid[i].answers.end()
                         ? 1
                         : 0;
        }
    });
    const double hits = std::accumulate(hit.begin(), hit.end(), 0.0);
    return 100.0 * hits / static_cast<double>(valid.size());
}

}  // namespace

QaTrainResult train_qa(const KnowledgeGraph& kg, const EmbeddingModel& model,
                       std::span<const QuestionRecord> train,
                       std::span<const QuestionRecord> valid, const QaTrainConfig& config,
                       int threads) {
    validate_config(config);
    if (model.entity_count() != kg.entity_count() || model.relation_count() != kg.relation_count())
        throw ContractError("train_qa: model tables do not match the graph vocabularies");
    validate_records(model, train, "train");
    validate_records(model, valid, "valid");

    QaTrainResult result{initial_encoder(model, train, config)};
    EncoderParams& params = result.encoder;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, "qa/train"));

    EncoderParams best = params;
    double best_hits = -1.0;
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    const auto token_dim = static_cast<std::size_t>(config.token_dim);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
            const std::size_t end = std::min(start + batch_size, order.size());
            EncoderGrad grad(params);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i)
                batch_loss +=
                    qa_question_loss_grad(model, params, train[order[i]],
                                          config.label_smoothing, 1.0, grad);
            if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, batch_index);

            const double scale = config.learning_rate / static_cast<double>(end - start);
            for (std::size_t i = 0; i < params.w1.size(); ++i) params.w1[i] -= scale * grad.w1[i];
            for (std::size_t i = 0; i < params.b1.size(); ++i) params.b1[i] -= scale * grad.b1[i];
            for (std::size_t i = 0; i < params.w2.size(); ++i) params.w2[i] -= scale * grad.w2[i];
            for (std::size_t i = 0; i < params.b2.size(); ++i) params.b2[i] -= scale * grad.b2[i];
            for (const auto& [row, g] : grad.token_rows) {
                double* table_row = params.token_table.data() + std::size_t{row} * token_dim;
                for (std::size_t d = 0; d < token_dim; ++d) table_row[d] -= scale * g[d];
            }
            epoch_loss += batch_loss;
        }
        result.last_epoch_loss =
            train.empty() ? 0.0 : epoch_loss / static_cast<double>(train.size());

        if (!valid.empty()) {
            const double hits = validation_hits(model, params, valid, threads);
            if (hits > best_hits) {
                best_hits = hits;
                best = params;
                result.best_epoch = epoch;
            }
        }
    }

    if (!valid.empty() && result.best_epoch >= 0) {
        result.encoder = std::move(best);
        result.best_valid_hits = best_hits;
    } else if (!valid.empty()) {
        result.best_valid_hits = validation_hits(model, params, valid, threads);
    }
    return result;
}

}  // namespace pathqa
