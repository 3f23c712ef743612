#include "pathqa/kge_train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "pathqa/errors.hpp"
#include "pathqa/parallel.hpp"
#include "pathqa/rng.hpp"

namespace pathqa {

namespace {

// Overflow-safe log(1 + e^x).
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double z = std::exp(x);
    return z / (1.0 + z);
}

// Loss weights on d(loss)/d(s+) and d(loss)/d(s-).
struct LossWeights {
    double positive = 0.0;
    double negative = 0.0;
};

LossWeights loss_weights(KgeFamily family, double sp, double sn, double margin) {
    if (family == KgeFamily::Multiplicative) return {-sigmoid(-sp), sigmoid(sn)};
    if (margin - sp + sn > 0.0) return {-1.0, 1.0};
    return {};
}

std::uint64_t row_key(bool is_entity, std::uint32_t row) {
    return (is_entity ? 0ull : (1ull << 32)) | row;
}

void validate_config(const KgeTrainConfig& config, KgeFamily family) {
    if (config.dim <= 0) throw ContractError("train_kge: dim must be positive");
    if (config.epochs < 0) throw ContractError("train_kge: epochs must be non-negative");
    if (config.batch_size <= 0) throw ContractError("train_kge: batch_size must be positive");
    if (!(config.learning_rate > 0.0))
        throw ContractError("train_kge: learning_rate must be positive");
    if (config.negatives_per_positive <= 0)
        throw ContractError("train_kge: negatives_per_positive must be positive");
    if (family != KgeFamily::Multiplicative && !(config.margin > 0.0))
        throw ContractError("train_kge: margin must be positive");
}

EntityId corrupt_entity(EntityId original, std::size_t entity_count, Rng& rng) {
    auto sample = static_cast<EntityId>(rng.below(entity_count));
    while (entity_count > 1 && sample == original)
        sample = static_cast<EntityId>(rng.below(entity_count));
    return sample;
}

Triple corrupted(const Triple& pos, std::size_t entity_count, Rng& rng) {
    Triple neg = pos;
    if (rng.coin())
        neg.head = corrupt_entity(neg.head, entity_count, rng);
    else
        neg.tail = corrupt_entity(neg.tail, entity_count, rng);
    return neg;
}

}  // namespace

double kge_pair_loss(const EmbeddingModel& model, const Triple& positive, const Triple& negative,
                     double margin) {
    const double sp = triple_score(model, positive.head, positive.relation, positive.tail);
    const double sn = triple_score(model, negative.head, negative.relation, negative.tail);
    if (model.family() == KgeFamily::Multiplicative) return softplus(-sp) + softplus(sn);
    return std::max(0.0, margin - sp + sn);
}

std::vector<ParamGrad> kge_gradient(const EmbeddingModel& model, const Triple& positive,
                                    const Triple& negative, double margin) {
    const double sp = triple_score(model, positive.head, positive.relation, positive.tail);
    const double sn = triple_score(model, negative.head, negative.relation, negative.tail);
    const LossWeights w = loss_weights(model.family(), sp, sn, margin);

    std::vector<ParamGrad> grads;
    grads.reserve(6);  // references from slot() must stay valid
    auto slot = [&](bool is_entity, std::uint32_t row) -> std::vector<double>& {
        for (auto& g : grads)
            if (g.is_entity == is_entity && g.row == row) return g.grad;
        grads.push_back({is_entity, row, std::vector<double>(static_cast<std::size_t>(model.width()), 0.0)});
        return grads.back().grad;
    };

    auto accumulate = [&](const Triple& t, double weight) {
        if (weight == 0.0) return;
        auto& gh = slot(true, t.head);
        auto& gr = slot(false, t.relation);
        auto& gt = slot(true, t.tail);
        score_grad_vectors(model.family(), model.space(), model.entity(t.head),
                           model.relation(t.relation), model.entity(t.tail), weight, gh, gr, gt);
    };
    accumulate(positive, w.positive);
    accumulate(negative, w.negative);
    return grads;
}

EmbeddingModel initial_kge_model(const KnowledgeGraph& kg, KgeFamily family,
                                 const KgeTrainConfig& config) {
    validate_config(config, family);
    const SpaceKind kind = family == KgeFamily::Multiplicative ? config.multiplicative_space
                           : family == KgeFamily::Additive     ? SpaceKind::Real
                                                               : SpaceKind::Complex;
    const EmbeddingSpace space = make_space(family, kind, config.dim);
    Rng rng(derive_seed(config.seed, "kge/init"));
    return EmbeddingModel::random_init(family, space, kg.entity_count(), kg.relation_count(), rng);
}

KgeTrainResult train_kge(const KnowledgeGraph& kg, KgeFamily family, const KgeTrainConfig& config) {
    if (kg.triple_count() == 0) throw ContractError("train_kge: graph has no triples");
    validate_config(config, family);

    KgeTrainResult result{initial_kge_model(kg, family, config)};
    EmbeddingModel& model = result.model;
    const auto width = static_cast<std::size_t>(model.width());
    const std::span<const Triple> all = kg.triples();

    // Hold out floor(5%) of the triples before augmenting the rest with
    // reversed copies. Graphs below 20 triples get no holdout — there the
    // observed/corrupted gap is measured in-sample instead (a 1-2 triple
    // holdout of a tiny graph is disconnected from what was trained and says
    // nothing).
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng(derive_seed(config.seed, "kge/holdout"));
    split_rng.shuffle(order);
    const std::size_t heldout_count = all.size() / 20;

    std::vector<Triple> heldout;
    heldout.reserve(heldout_count);
    std::vector<Triple> train;
    train.reserve(2 * (all.size() - heldout_count));
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Triple& t = all[order[i]];
        if (i < heldout_count) {
            heldout.push_back(t);
        } else {
            train.push_back(t);
            train.push_back(Triple{t.tail, inverse(t.relation), t.head});
        }
    }

    Rng rng(derive_seed(config.seed, "kge/train"));
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(train);
        double epoch_loss = 0.0;
        std::size_t epoch_pairs = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < train.size(); start += batch_size, ++batch_index) {
            const std::size_t end = std::min(start + batch_size, train.size());
            std::unordered_map<std::uint64_t, std::vector<double>> acc;
            double batch_loss = 0.0;
            std::size_t batch_pairs = 0;
            for (std::size_t i = start; i < end; ++i) {
                const Triple& pos = train[i];
                for (int j = 0; j < config.negatives_per_positive; ++j) {
                    const Triple neg = corrupted(pos, kg.entity_count(), rng);
                    batch_loss += kge_pair_loss(model, pos, neg, config.margin);
                    ++batch_pairs;
                    for (const ParamGrad& g : kge_gradient(model, pos, neg, config.margin)) {
                        auto& row = acc[row_key(g.is_entity, g.row)];
                        if (row.empty()) row.assign(width, 0.0);
                        for (std::size_t d = 0; d < width; ++d) row[d] += g.grad[d];
                    }
                }
            }
            if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, batch_index);
            // Rows are disjoint, so map order cannot affect the result.
            const double scale = config.learning_rate / static_cast<double>(batch_pairs);
            for (const auto& [key, grad] : acc) {
                const bool is_entity = (key >> 32) == 0;
                const auto row = static_cast<std::uint32_t>(key & 0xffffffffu);
                const std::span<double> param = is_entity ? model.entity(row) : model.relation(row);
                for (std::size_t d = 0; d < width; ++d) param[d] -= scale * grad[d];
            }
            if (family == KgeFamily::HadamardRotation) {
                for (const auto& [key, grad] : acc)
                    if ((key >> 32) != 0)
                        model.renormalize_relation(static_cast<std::uint32_t>(key & 0xffffffffu));
            }
            epoch_loss += batch_loss;
            epoch_pairs += batch_pairs;
        }
        result.last_epoch_loss = epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0;
    }

    // Diagnostic gap on the untouched split (in-sample when it is empty),
    // corruptions drawn from a dedicated stream so epoch count cannot shift
    // them.
    result.heldout_count = heldout.size();
    const std::span<const Triple> measured = heldout.empty() ? all : std::span<const Triple>(heldout);
    Rng eval_rng(derive_seed(config.seed, "kge/heldout-eval"));
    double observed = 0.0;
    double corrupted_sum = 0.0;
    std::size_t corrupted_n = 0;
    for (const Triple& t : measured) {
        observed += triple_score(model, t.head, t.relation, t.tail);
        for (int j = 0; j < config.negatives_per_positive; ++j) {
            const Triple neg = corrupted(t, kg.entity_count(), eval_rng);
            corrupted_sum += triple_score(model, neg.head, neg.relation, neg.tail);
            ++corrupted_n;
        }
    }
    result.heldout_observed_mean = observed / static_cast<double>(measured.size());
    result.heldout_corrupted_mean = corrupted_sum / static_cast<double>(corrupted_n);
    return result;
}

LinkPredictionMetrics link_prediction_eval(const EmbeddingModel& model,
                                           std::span<const Triple> test,
                                           std::span<const Triple> all, int threads) {
    if (test.empty()) throw ContractError("link_prediction_eval: empty test set");
    const std::size_t entities = model.entity_count();
    for (const Triple& t : test) {
        if (t.head >= entities || t.tail >= entities || t.relation >= model.relation_count())
            throw ContractError("link_prediction_eval: triple references unknown id");
    }

    // (head, relation) -> sorted known tails, the filter set.
    std::unordered_map<std::uint64_t, std::vector<EntityId>> known;
    known.reserve(all.size());
    for (const Triple& t : all)
        known[(static_cast<std::uint64_t>(t.head) << 32) | t.relation].push_back(t.tail);
    for (auto& [key, tails] : known) std::sort(tails.begin(), tails.end());

    std::vector<double> reciprocal(test.size());
    std::vector<std::uint8_t> at1(test.size()), at10(test.size());
    parallel_for(test.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Triple& t = test[i];
            const double true_score = triple_score(model, t.head, t.relation, t.tail);
            const auto it = known.find((static_cast<std::uint64_t>(t.head) << 32) | t.relation);
            const std::vector<EntityId>* filter = it == known.end() ? nullptr : &it->second;
            std::size_t higher = 0;
            for (EntityId e = 0; e < entities; ++e) {
                if (e == t.tail) continue;
                if (filter && std::binary_search(filter->begin(), filter->end(), e)) continue;
                if (triple_score(model, t.head, t.relation, e) > true_score) ++higher;
            }
            const std::size_t rank = 1 + higher;
            reciprocal[i] = 1.0 / static_cast<double>(rank);
            at1[i] = rank == 1 ? 1 : 0;
            at10[i] = rank <= 10 ? 1 : 0;
        }
    });

    LinkPredictionMetrics metrics;
    metrics.test_count = test.size();
    const auto n = static_cast<double>(test.size());
    metrics.hits_at_1 = std::accumulate(at1.begin(), at1.end(), 0.0) / n;
    metrics.hits_at_10 = std::accumulate(at10.begin(), at10.end(), 0.0) / n;
    metrics.mrr = std::accumulate(reciprocal.begin(), reciprocal.end(), 0.0) / n;
    return metrics;
}

}  // namespace pathqa
