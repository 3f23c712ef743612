// Acceptance gate: one numbered criterion per line, [PASS]/[FAIL]/[SKIP].
// Exit code 0 only when nothing failed. Criterion 7 needs a full-scale
// dataset directory (--dataset-dir DIR or PATHQA_DATASET_DIR) and is skipped
// otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "pathqa/eval.hpp"
#include "pathqa/kg.hpp"
#include "pathqa/kge_train.hpp"
#include "pathqa/manifest.hpp"
#include "pathqa/paths.hpp"
#include "pathqa/qa_train.hpp"
#include "pathqa/rng.hpp"
#include "pathqa/scorer.hpp"
#include "test_support.hpp"

#ifndef PATHQA_CLI_PATH
#error "PATHQA_CLI_PATH must point at the command line binary"
#endif

namespace {

using namespace pathqa;
using testsupport::brute_force_shortest_paths;
using testsupport::graph_from;
using testsupport::max_loss_grad_fd_error;
using testsupport::random_model;
using testsupport::random_multigraph_kb;
using testsupport::rel_err;

// ---- pinned tolerances and gates -------------------------------------------

constexpr double kGradRelTol = 1e-4;           // gradient vs central differences
constexpr double kCommuteRelTol = 1e-12;       // path embedding under reordering
constexpr double kUnitModulusTol = 1e-9;       // rotation path component modulus
constexpr double kBoundSlack = 1e-12;          // ambipolar range, cosine rounding
constexpr double kScaleLooseTol = 1e-9;        // non-power-of-two cosine scaling
constexpr double kAggregateTol = 1e-9;         // recomputed vs reported percentages
constexpr double kFullKg1HopGate = 90.0;       // mean 1-hop Hits@1, full graph
constexpr double kReplicationTol = 2.5;        // criterion 7, percentage points
// criterion 7 reference accuracies (full graph, then halved graph; hops 1..3)
constexpr double kReferenceFull[3] = {98.0, 99.3, 95.1};
constexpr double kReferenceHalf[3] = {85.0, 92.5, 70.7};

constexpr double kBudgetSeconds[6] = {120.0, 60.0, 60.0, 120.0, 1800.0, 60.0};

// ---- harness ----------------------------------------------------------------

struct Checker {
    std::size_t passed = 0;
    std::vector<std::string> failures;

    void check(bool ok, const std::string& what) {
        if (ok)
            ++passed;
        else
            failures.push_back(what);
    }
    template <class T, class U>
    void equal(const T& a, const U& b, const std::string& what) {
        check(a == b, what);
    }
};

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        std::string tmpl =
            (std::filesystem::temp_directory_path() / "pathqa-accept-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string("'") + PATHQA_CLI_PATH + "' " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    CliResult result;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) result.output.append(buf, n);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string fmt1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// ---- criterion 1: module invariants -----------------------------------------

void check_graph_invariants(Checker& c) {
    Rng rng(101);
    for (int g = 0; g < 20; ++g) {
        const std::string text = random_multigraph_kb(rng);
        const auto kg = graph_from(text);

        // adjacency holds both directions of every triple
        bool adjacency_ok = true;
        for (const Triple& t : kg.triples()) {
            const auto out = kg.neighbors(t.head);
            const auto back = kg.neighbors(t.tail);
            adjacency_ok &= std::find(out.begin(), out.end(), Edge{t.relation, t.tail}) !=
                            out.end();
            adjacency_ok &= std::find(back.begin(), back.end(),
                                      Edge{inverse(t.relation), t.head}) != back.end();
        }
        c.check(adjacency_ok, "graph " + std::to_string(g) + ": adjacency misses a direction");

        // relation vocabulary doubled by the inverse augmentation
        std::set<std::string> distinct;
        std::istringstream lines(text);
        for (std::string line; std::getline(lines, line);) {
            const auto a = line.find('|'), b = line.rfind('|');
            distinct.insert(line.substr(a + 1, b - a - 1));
        }
        c.equal(kg.relation_count(), 2 * distinct.size(),
                "graph " + std::to_string(g) + ": relation count is not twice the source");
        bool involution_ok = true;
        for (RelationId r = 0; r < kg.relation_count(); ++r) {
            involution_ok &= inverse(inverse(r)) == r;
            if ((r & 1u) == 0)
                involution_ok &= kg.relation_name(r + 1) ==
                                 kg.relation_name(r) + std::string(kInverseSuffix);
        }
        c.check(involution_ok, "graph " + std::to_string(g) + ": inverse involution broken");

        // serialize -> load round trip
        std::stringstream buffer;
        kg.save(buffer);
        const auto back = KnowledgeGraph::load(buffer);
        c.check(back.entity_names() == kg.entity_names() &&
                    back.relation_names() == kg.relation_names() &&
                    back.triples() == kg.triples(),
                "graph " + std::to_string(g) + ": save/load round trip changed the graph");

        // seeded half-sampling: deterministic subset of half size
        const auto half_a = kg.subsample_half(7);
        const auto half_b = kg.subsample_half(7);
        c.check(half_a.triples() == half_b.triples(),
                "graph " + std::to_string(g) + ": subsample_half is not deterministic");
        c.equal(half_a.triple_count(), kg.triple_count() / 2,
                "graph " + std::to_string(g) + ": subsample_half kept a wrong count");
        const std::set<Triple> full_set(kg.triples().begin(), kg.triples().end());
        c.check(std::all_of(half_a.triples().begin(), half_a.triples().end(),
                            [&](const Triple& t) { return full_set.count(t) > 0; }),
                "graph " + std::to_string(g) + ": subsample_half invented triples");
    }
}

void check_kge_invariants(Checker& c) {
    Rng rng(202);

    // distance families never score above zero
    for (auto [family, kind] : {std::pair{KgeFamily::Additive, SpaceKind::Real},
                                std::pair{KgeFamily::HadamardRotation, SpaceKind::Complex}}) {
        const auto m = random_model(family, kind, 6, 8, 4, rng.next());
        bool nonpositive = true;
        for (EntityId h = 0; h < 8; ++h)
            for (RelationId r = 0; r < 4; ++r)
                for (EntityId t = 0; t < 8; ++t) nonpositive &= triple_score(m, h, r, t) <= 0.0;
        c.check(nonpositive, std::string(to_string(family)) + ": found a positive score");
    }

    // additive score is zero exactly when head + relation lands on the tail
    {
        auto m = random_model(KgeFamily::Additive, SpaceKind::Real, 6, 4, 2, rng.next());
        auto h = m.entity(0);
        auto r = m.relation(1);
        auto t = m.entity(3);
        for (int d = 0; d < 6; ++d) t[d] = h[d] + r[d];
        c.equal(triple_score(m, 0, 1, 3), 0.0, "additive: exact composition must score zero");
        c.check(triple_score(m, 0, 1, 2) < 0.0, "additive: mismatch must score negative");
    }

    // rotating by the identity phases leaves the head in place
    {
        auto m = random_model(KgeFamily::HadamardRotation, SpaceKind::Complex, 5, 4, 4,
                              rng.next());
        auto id = m.relation(2);
        for (int d = 0; d < 5; ++d) {
            id[2 * d] = 1.0;
            id[2 * d + 1] = 0.0;
        }
        c.equal(triple_score(m, 1, 2, 1), 0.0, "rotation: identity relation must score zero");
        c.check(triple_score(m, 1, 2, 3) < 0.0, "rotation: identity onto another entity");
    }

    // complex trilinear score collapses to the real one without imaginary parts
    {
        const auto real = random_model(KgeFamily::Multiplicative, SpaceKind::Real, 6, 4, 4,
                                       rng.next());
        auto cplx = EmbeddingModel(KgeFamily::Multiplicative,
                                   make_space(KgeFamily::Multiplicative, SpaceKind::Complex, 6),
                                   4, 4);
        for (EntityId e = 0; e < 4; ++e)
            for (int d = 0; d < 6; ++d) cplx.entity(e)[2 * d] = real.entity(e)[d];
        for (RelationId r = 0; r < 4; ++r)
            for (int d = 0; d < 6; ++d) cplx.relation(r)[2 * d] = real.relation(r)[d];
        bool agree = true;
        for (EntityId h = 0; h < 4; ++h)
            for (EntityId t = 0; t < 4; ++t)
                agree &= rel_err(triple_score(cplx, h, 1, t), triple_score(real, h, 1, t)) <=
                         kCommuteRelTol;
        c.check(agree, "multiplicative: zero-imaginary complex differs from real");
    }

    // renaming entities while moving their rows moves no score
    {
        const auto kg = graph_from(random_multigraph_kb(rng));
        const auto m = random_model(KgeFamily::Multiplicative, SpaceKind::Complex, 4,
                                    kg.entity_count(), kg.relation_count(), rng.next());
        std::vector<EntityId> perm(kg.entity_count());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<EntityId>(i);
        rng.shuffle(perm);
        EmbeddingModel permuted = m;
        for (std::size_t e = 0; e < perm.size(); ++e) {
            const auto src = m.entity(static_cast<EntityId>(e));
            auto dst = permuted.entity(perm[e]);
            std::copy(src.begin(), src.end(), dst.begin());
        }
        bool same = true;
        for (const Triple& t : kg.triples())
            same &= triple_score(m, t.head, t.relation, t.tail) ==
                    triple_score(permuted, perm[t.head], t.relation, perm[t.tail]);
        c.check(same, "permuting entity ids and rows together changed a score");
    }

    // seeded training is bit-for-bit repeatable
    {
        const auto kg = graph_from(
            "a|r|b\nb|r|c\nc|r|d\nd|s|a\na|s|c\nb|s|d\nd|r|a\nc|s|b\n");
        KgeTrainConfig config;
        config.dim = 6;
        config.epochs = 4;
        config.batch_size = 4;
        config.learning_rate = 0.5;
        config.seed = 13;
        const auto first = train_kge(kg, KgeFamily::Multiplicative, config);
        const auto second = train_kge(kg, KgeFamily::Multiplicative, config);
        c.check(first.model.entity_data() == second.model.entity_data() &&
                    first.model.relation_data() == second.model.relation_data(),
                "train_kge with one seed produced two different models");
        c.equal(first.last_epoch_loss, second.last_epoch_loss,
                "train_kge with one seed produced two different losses");
    }
}

void check_path_invariants(Checker& c) {
    Rng rng(303);

    // composition ignores relation order in every family
    for (auto [family, kind] : {std::pair{KgeFamily::Additive, SpaceKind::Real},
                                std::pair{KgeFamily::Multiplicative, SpaceKind::Real},
                                std::pair{KgeFamily::Multiplicative, SpaceKind::Complex},
                                std::pair{KgeFamily::HadamardRotation, SpaceKind::Complex}}) {
        const auto m = random_model(family, kind, 6, 2, 8, rng.next());
        std::vector<RelationId> rels{1, 4, 2, 7};
        const auto p1 = path_embedding(m, RelationPath{rels, 0, 1});
        rng.shuffle(rels);
        const auto p2 = path_embedding(m, RelationPath{rels, 0, 1});
        bool same = p1.size() == p2.size();
        for (std::size_t d = 0; same && d < p1.size(); ++d)
            same = rel_err(p1[d], p2[d]) <= kCommuteRelTol;
        c.check(same, std::string(to_string(family)) + ": reordered path embeds differently");
    }

    // rotation compositions stay on the unit circle
    {
        const auto m =
            random_model(KgeFamily::HadamardRotation, SpaceKind::Complex, 5, 2, 8, rng.next());
        const auto p = path_embedding(m, RelationPath{{0, 3, 5, 2, 6}, 0, 1});
        bool unit = true;
        for (std::size_t d = 0; d + 1 < p.size(); d += 2)
            unit &= std::abs(std::hypot(p[d], p[d + 1]) - 1.0) <= kUnitModulusTol;
        c.check(unit, "rotation path drifted off the unit circle");
    }

    // enumeration is deterministic and agrees with brute force on small graphs
    for (int g = 0; g < 15; ++g) {
        const auto kg = graph_from(random_multigraph_kb(rng));
        const auto s = static_cast<EntityId>(rng.below(kg.entity_count()));
        const auto t = static_cast<EntityId>(rng.below(kg.entity_count()));
        const int hops = 1 + static_cast<int>(rng.below(3));
        const auto got = shortest_relation_paths(kg, s, t, hops, 16);
        c.check(got == shortest_relation_paths(kg, s, t, hops, 16),
                "repeated path query " + std::to_string(g) + " disagreed with itself");
        const auto want = brute_force_shortest_paths(kg, s, t, hops, 16);
        bool same = got.size() == want.size();
        for (std::size_t i = 0; same && i < got.size(); ++i)
            same = got[i].relations == want[i] && got[i].source == s && got[i].target == t;
        c.check(same, "path query " + std::to_string(g) + " disagreed with brute force");
    }
}

void check_encoder_invariants(Checker& c) {
    const auto data = generate_synthetic(24, 2, {1}, 40);
    const auto& hop = data.hops.at(1);

    KgeTrainConfig kge;
    kge.dim = 8;
    kge.epochs = 10;
    kge.batch_size = 8;
    kge.learning_rate = 0.5;
    kge.seed = 5;
    const auto model = train_kge(data.kg, KgeFamily::Multiplicative, kge).model;

    // the embedding tables stay frozen through encoder training
    const auto entities_before = model.entity_data();
    const auto relations_before = model.relation_data();
    QaTrainConfig qa;
    qa.epochs = 6;
    qa.batch_size = 8;
    qa.learning_rate = 0.5;
    qa.token_dim = 10;
    qa.hidden_dim = 8;
    qa.seed = 6;
    const auto trained = train_qa(data.kg, model, hop.train.records, hop.valid.records, qa);
    c.check(model.entity_data() == entities_before &&
                model.relation_data() == relations_before,
            "train_qa touched the frozen embedding tables");

    // encoding is pure and blind to token order under mean pooling
    const auto& params = trained.encoder;
    const auto& tokens = hop.train.records.front().tokens;
    c.check(encode_question(params, tokens) == encode_question(params, tokens),
            "encode_question is not a pure function");
    {
        const std::vector<std::string> ab{tokens[0], tokens[1]};
        const std::vector<std::string> ba{tokens[1], tokens[0]};
        c.check(encode_question(params, ab) == encode_question(params, ba),
                "swapping two tokens changed the encoding");
        // doubling a value and halving back are both exact, so {w,w} == {w}
        const std::vector<std::string> once{tokens[0]};
        const std::vector<std::string> twice{tokens[0], tokens[0]};
        c.check(encode_question(params, once) == encode_question(params, twice),
                "repeating one token moved the pooled mean");
    }

    // a seeded retrain reproduces the encoder bit for bit
    const auto again = train_qa(data.kg, model, hop.train.records, hop.valid.records, qa);
    c.check(again.encoder.token_table == params.token_table && again.encoder.w1 == params.w1 &&
                again.encoder.w2 == params.w2 && again.encoder.b1 == params.b1 &&
                again.encoder.b2 == params.b2,
            "train_qa with one seed produced two different encoders");
}

void check_scorer_invariants(Checker& c) {
    Rng rng(404);
    const double bound = std::tanh(1.0);

    // ambipolar range, sign, and the neutral mode
    bool in_range = true, sigmoid_range = true, nopath_zero = true;
    for (int i = 0; i < 500; ++i) {
        std::vector<double> q(8), p(8);
        for (auto& v : q) v = rng.uniform(-2.0, 2.0);
        for (auto& v : p) v = rng.uniform(-2.0, 2.0);
        const double full = ambipolar_term(q, p, ScoreMode::Full);
        in_range &= full >= -bound - kBoundSlack && full <= bound + kBoundSlack;
        const double sig = ambipolar_term(q, p, ScoreMode::SigmoidPath);
        sigmoid_range &= sig > 0.0 && sig < 1.0;
        nopath_zero &= ambipolar_term(q, p, ScoreMode::NoPath) == 0.0;
    }
    c.check(in_range, "full-mode correlation left [-tanh(1), tanh(1)]");
    c.check(sigmoid_range, "sigmoid-mode correlation left (0, 1)");
    c.check(nopath_zero, "no-path correlation is not identically zero");
    {
        const std::vector<double> q{0.3, -1.25, 2.0, 0.5};
        c.check(std::abs(ambipolar_term(q, q, ScoreMode::Full) - bound) <= kBoundSlack,
                "parallel vectors missed tanh(1)");
        auto neg = q;
        for (auto& v : neg) v = -v;
        c.check(std::abs(ambipolar_term(q, neg, ScoreMode::Full) + bound) <= kBoundSlack,
                "anti-parallel vectors missed -tanh(1)");
        c.equal(path_term_bound(ScoreMode::Full), bound, "full-mode bound is not tanh(1)");
        c.equal(path_term_bound(ScoreMode::NoPath), 0.0, "no-path bound is not zero");
        c.equal(path_term_bound(ScoreMode::SigmoidPath), 1.0, "sigmoid bound is not one");
    }

    // cosine ignores positive rescaling: exactly for power-of-two factors
    {
        std::vector<double> q(6), p(6);
        for (auto& v : q) v = rng.uniform(-1.0, 1.0);
        for (auto& v : p) v = rng.uniform(-1.0, 1.0);
        const double base = ambipolar_term(q, p, ScoreMode::Full);
        for (double scale : {2.0, 0.5, 1024.0}) {
            auto qs = q;
            auto ps = p;
            for (auto& v : qs) v *= scale;
            for (auto& v : ps) v *= 4.0;
            c.equal(ambipolar_term(qs, ps, ScoreMode::Full), base,
                    "power-of-two rescaling moved the correlation");
        }
        auto qs = q;
        for (auto& v : qs) v *= 3.7;
        c.check(rel_err(ambipolar_term(qs, p, ScoreMode::Full), base) <= kScaleLooseTol,
                "arbitrary positive rescaling moved the correlation beyond rounding");
    }

    // ranking: linear total, sorted output, repeatable, path-blind in no-path mode
    {
        const auto kg = graph_from(
            "a|r1|b\nb|r2|c\nc|r1|d\nd|r2|e\ne|r1|a\na|r2|c\nb|r1|d\nc|r2|e\n");
        const auto m = random_model(KgeFamily::Multiplicative, SpaceKind::Complex, 5,
                                    kg.entity_count(), kg.relation_count(), rng.next());
        std::vector<double> q(m.width());
        for (auto& v : q) v = rng.uniform(-1.0, 1.0);

        AnswerConfig config;
        config.alpha = 0.4;
        const auto ranked = rank_candidates(kg, m, q, 0, config);
        c.equal(ranked.size(), kg.entity_count(), "ranking does not cover every entity");
        bool linear = true, sorted = true;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            linear &= ranked[i].total ==
                      ranked[i].triple_score + config.alpha * ranked[i].path_term;
            if (i > 0)
                sorted &= ranked[i - 1].total > ranked[i].total ||
                          (ranked[i - 1].total == ranked[i].total &&
                           ranked[i - 1].entity < ranked[i].entity);
        }
        c.check(linear, "total is not triple score plus weighted correlation");
        c.check(sorted, "ranking violates the total-then-id order");
        const auto replay = rank_candidates(kg, m, q, 0, config);
        bool stable = replay.size() == ranked.size();
        for (std::size_t i = 0; stable && i < replay.size(); ++i)
            stable = replay[i].entity == ranked[i].entity && replay[i].total == ranked[i].total;
        c.check(stable, "ranking is not deterministic");

        // raising the correlation strictly raises the total
        RelationPath aligned{{0}, 0, 1}, opposed{{1}, 0, 1};
        const auto hi = combined_score(m, 0, q, 1, {aligned}, config);
        const auto lo = combined_score(m, 0, q, 1, {opposed}, config);
        if (hi.path_term != lo.path_term)
            c.check((hi.path_term > lo.path_term) == (hi.total > lo.total),
                    "a larger correlation did not move the total the same way");

        // no-path mode must survive deleting every edge
        config.mode = ScoreMode::NoPath;
        config.alpha = 0.9;
        const auto with_graph = rank_candidates(kg, m, q, 0, config);
        const auto no_edges = KnowledgeGraph::build(kg.entity_names(), kg.relation_names(), {});
        const auto without = rank_candidates(no_edges, m, q, 0, config);
        bool immune = with_graph.size() == without.size();
        for (std::size_t i = 0; immune && i < without.size(); ++i)
            immune = with_graph[i].entity == without[i].entity &&
                     with_graph[i].total == without[i].total &&
                     with_graph[i].path_term == 0.0 && !with_graph[i].explanation;
        c.check(immune, "no-path ranking depends on the path engine");
    }
}

void check_pipeline_invariants(Checker& c, const TempDir& tmp) {
    const auto data = generate_synthetic(30, 2, {1}, 21);
    const auto dir = tmp.sub("pipeline");
    write_synthetic(data, dir);

    ExperimentConfig config;
    config.kb_path = dir + "/kb.txt";
    config.qa[1] = {dir + "/qa_1hop_train.txt", dir + "/qa_1hop_valid.txt",
                    dir + "/qa_1hop_test.txt"};
    config.kge.dim = 12;
    config.kge.epochs = 40;
    config.kge.batch_size = 16;
    config.kge.learning_rate = 1.0;
    config.qa_train.epochs = 30;
    config.qa_train.batch_size = 16;
    config.qa_train.learning_rate = 1.0;
    config.qa_train.token_dim = 16;
    config.qa_train.hidden_dim = 16;
    config.seed = 11;
    config.answer.max_hops = 3;

    const auto report = run_experiment(config);

    // the reported aggregate must be recomputable from its own prediction log
    for (const auto& hop : report.hops)
        for (const auto& mode : hop.modes) {
            std::vector<EntityId> predicted;
            std::vector<std::vector<EntityId>> gold;
            for (const auto& rec : mode.log) {
                predicted.push_back(rec.predicted);
                gold.push_back(rec.gold);
            }
            c.equal(mode.questions, mode.log.size(), "prediction log misses questions");
            c.check(std::abs(hits_at_1(predicted, gold) - mode.hits) <= kAggregateTol,
                    std::string(to_string(mode.mode)) +
                        ": reported Hits@1 does not match its own log");
        }

    // no-path accuracy cannot depend on how deep the path search goes
    auto shallow = config;
    shallow.answer.max_hops = 1;
    const auto replay = run_experiment(shallow);
    for (std::size_t h = 0; h < report.hops.size(); ++h) {
        const auto& a = report.hops[h].modes;
        const auto& b = replay.hops[h].modes;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].mode == ScoreMode::NoPath)
                c.equal(a[i].hits, b[i].hits, "no-path Hits@1 moved with the hop limit");
    }

    // handing the scorer the gold relation's own embedding must answer
    // one-hop questions perfectly wherever training separated the gold
    // triples from every corruption
    KgeTrainConfig kge;
    kge.dim = 32;
    kge.epochs = 400;
    kge.batch_size = 16;
    kge.learning_rate = 0.1;
    kge.seed = 3;
    const auto oracle_data = generate_synthetic(20, 2, {1}, 12);
    const auto model = train_kge(oracle_data.kg, KgeFamily::Additive, kge).model;
    AnswerConfig answer;
    answer.path_policy = PathPolicy::MaxCorrelation;
    int premise_held = 0;
    bool oracle_ok = true;
    for (const auto* split : {&oracle_data.hops.at(1).train, &oracle_data.hops.at(1).valid,
                              &oracle_data.hops.at(1).test}) {
        for (std::size_t i = 0; i < split->records.size(); ++i) {
            const auto& rec = split->records[i];
            const RelationId r = split->gold_paths[i][0];
            double worst_gold = 1e300, best_other = -1e300;
            for (EntityId e = 0; e < oracle_data.kg.entity_count(); ++e) {
                const double s = triple_score(model, rec.topic, r, e);
                const bool is_gold =
                    std::find(rec.answers.begin(), rec.answers.end(), e) != rec.answers.end();
                (is_gold ? worst_gold : best_other) =
                    is_gold ? std::min(worst_gold, s) : std::max(best_other, s);
            }
            if (!(worst_gold > best_other)) continue;
            ++premise_held;
            const auto q = path_embedding(model, RelationPath{{r}, 0, 0});
            const auto ranked = rank_candidates(oracle_data.kg, model, q, rec.topic, answer);
            oracle_ok &= std::find(rec.answers.begin(), rec.answers.end(), ranked[0].entity) !=
                         rec.answers.end();
        }
    }
    c.check(oracle_ok, "an oracle question embedding missed a separable one-hop answer");
    c.check(premise_held >= 5, "oracle premise held on fewer than 5 questions (vacuous)");
}

void check_runner_invariants(Checker& c, const TempDir& tmp) {
    const auto q = [](const std::string& s) { return "'" + s + "'"; };

    // paper-default flag values are what --help advertises
    const auto kge_help = run_cli("train-kge --help");
    c.equal(kge_help.exit_code, 0, "train-kge --help failed");
    for (const char* needle : {"[200]", "[128]", "[0.0005]"})
        c.check(kge_help.output.find(needle) != std::string::npos,
                std::string("train-kge --help does not advertise ") + needle);
    const auto qa_help = run_cli("train-qa --help");
    c.check(qa_help.output.find("[256]") != std::string::npos,
            "train-qa --help does not advertise [256]");
    const auto answer_help = run_cli("answer --help");
    c.check(answer_help.output.find("[0.1]") != std::string::npos,
            "answer --help does not advertise [0.1]");

    // every stage writes a manifest, and a rerun reproduces the checksums
    const auto dataset = tmp.sub("runner-data");
    const auto synth = run_cli("synth --entities 20 --relations 2 --hops 1 --seed 9 --out " +
                               q(dataset));
    c.equal(synth.exit_code, 0, "synth run failed: " + synth.output);
    c.check(std::filesystem::exists(dataset + "/manifest.json"), "synth wrote no manifest");

    const std::string kb = dataset + "/kb.txt";
    for (const char* name : {"a", "b"}) {
        const auto model = tmp.sub(std::string("model-") + name + ".bin");
        const auto train = run_cli("train-kge --kb " + q(kb) +
                                   " --family multiplicative --dim 8 --epochs 30"
                                   " --batch-size 16 --lr 1.0 --seed 17 --out " +
                                   q(model));
        c.equal(train.exit_code, 0, std::string("train-kge run ") + name + " failed");
    }
    const auto manifest_a = RunManifest::load(tmp.sub("model-a.bin.manifest.json"));
    const auto manifest_b = RunManifest::load(tmp.sub("model-b.bin.manifest.json"));
    c.equal(manifest_a.root_seed, std::uint64_t{17}, "manifest lost the root seed");
    c.check(!manifest_a.outputs.empty(), "train-kge manifest lists no outputs");
    bool same_checksums = manifest_a.outputs.size() == manifest_b.outputs.size();
    for (const auto& [path, checksum] : manifest_a.outputs) {
        const auto stem = std::filesystem::path(path).extension().string();
        bool matched = false;
        for (const auto& [other, other_sum] : manifest_b.outputs)
            if (std::filesystem::path(other).extension() == stem && other_sum == checksum)
                matched = true;
        same_checksums &= matched;
    }
    c.check(same_checksums, "a seeded rerun changed an output checksum");
}

void criterion_properties(Checker& c) {
    TempDir tmp;
    check_graph_invariants(c);
    check_kge_invariants(c);
    check_path_invariants(c);
    check_encoder_invariants(c);
    check_scorer_invariants(c);
    check_pipeline_invariants(c, tmp);
    check_runner_invariants(c, tmp);
}

// ---- criterion 2: path enumeration vs brute force ---------------------------

void criterion_path_oracle(Checker& c) {
    Rng rng(505);
    int graphs = 0, queries = 0;
    for (; graphs < 220; ++graphs) {
        const auto kg = graph_from(random_multigraph_kb(rng, 12));
        for (int k = 0; k < 4; ++k) {
            const auto s = static_cast<EntityId>(rng.below(kg.entity_count()));
            const auto t = static_cast<EntityId>(rng.below(kg.entity_count()));
            const int hops = 1 + static_cast<int>(rng.below(4));
            const int cap = rng.coin() ? 16 : 3;
            const auto got = shortest_relation_paths(kg, s, t, hops, cap);
            const auto want = brute_force_shortest_paths(kg, s, t, hops, cap);
            bool same = got.size() == want.size();
            for (std::size_t i = 0; same && i < got.size(); ++i)
                same = got[i].relations == want[i] && got[i].source == s && got[i].target == t;
            if (s == t) same = same && got.empty();
            c.check(same, "graph " + std::to_string(graphs) + " query " + std::to_string(k) +
                              ": enumeration disagrees with brute force");
            ++queries;
        }
    }
    c.check(graphs >= 200, "fewer than 200 graphs were checked");
    c.check(queries >= 800, "fewer than 800 queries were checked");
}

// ---- criterion 3: gradients vs central finite differences -------------------

void criterion_gradients(Checker& c) {
    Rng rng(606);
    const struct {
        KgeFamily family;
        SpaceKind kind;
    } setups[] = {
        {KgeFamily::Additive, SpaceKind::Real},
        {KgeFamily::Multiplicative, SpaceKind::Complex},
        {KgeFamily::HadamardRotation, SpaceKind::Complex},
    };
    for (const auto& s : setups) {
        int accepted = 0;
        double worst = 0.0;
        for (int attempt = 0; attempt < 600 && accepted < 110; ++attempt) {
            const auto m = random_model(s.family, s.kind, 5, 6, 4, rng.next());
            const Triple pos{static_cast<EntityId>(rng.below(6)),
                             static_cast<RelationId>(rng.below(4)),
                             static_cast<EntityId>(rng.below(6))};
            Triple neg = pos;
            neg.tail = static_cast<EntityId>(rng.below(6));
            const double margin = 2.0;
            // hinge losses are non-differentiable at the kink; sample around it
            const double sp = triple_score(m, pos.head, pos.relation, pos.tail);
            const double sn = triple_score(m, neg.head, neg.relation, neg.tail);
            if (s.family != KgeFamily::Multiplicative && std::abs(margin - sp + sn) < 1e-3)
                continue;
            worst = std::max(worst, max_loss_grad_fd_error(m, pos, neg, margin));
            ++accepted;
        }
        c.check(accepted >= 100, std::string(to_string(s.family)) +
                                     ": fewer than 100 usable gradient points");
        c.check(worst <= kGradRelTol, std::string(to_string(s.family)) +
                                          ": worst gradient error " + std::to_string(worst));
    }

    // encoder loss against the same oracle, across output spaces
    int accepted = 0;
    double worst = 0.0;
    for (int instance = 0; instance < 102; ++instance) {
        const auto& s = setups[instance % 3];
        const auto m = random_model(s.family, s.kind, 3, 5, 2, rng.next());
        QuestionRecord question;
        question.tokens = {"which", "thing", "<topic>"};
        question.topic = static_cast<EntityId>(rng.below(5));
        question.answers = {static_cast<EntityId>(rng.below(5))};
        QaTrainConfig config;
        config.token_dim = 4;
        config.hidden_dim = 3;
        config.seed = rng.next();
        auto params = initial_encoder(m, {&question, 1}, config);

        EncoderGrad grad(params);
        qa_question_loss_grad(m, params, question, 0.05, 1.0, grad);
        const double step = 1e-5;
        auto fd = [&](std::vector<double>& table, const std::vector<double>& g,
                      std::size_t idx) {
            const double saved = table[idx];
            table[idx] = saved + step;
            const double up = qa_question_loss(m, params, question, 0.05);
            table[idx] = saved - step;
            const double down = qa_question_loss(m, params, question, 0.05);
            table[idx] = saved;
            worst = std::max(worst, rel_err((up - down) / (2 * step), g[idx]));
        };
        for (std::size_t i = 0; i < params.w1.size(); i += 5) fd(params.w1, grad.w1, i);
        for (std::size_t i = 0; i < params.b1.size(); ++i) fd(params.b1, grad.b1, i);
        for (std::size_t i = 0; i < params.w2.size(); i += 4) fd(params.w2, grad.w2, i);
        for (std::size_t i = 0; i < params.b2.size(); ++i) fd(params.b2, grad.b2, i);
        for (const auto& [row, g] : grad.token_rows)
            for (std::size_t d = 0; d < g.size(); d += 2) {
                const std::size_t idx = row * static_cast<std::size_t>(config.token_dim) + d;
                const double saved = params.token_table[idx];
                params.token_table[idx] = saved + step;
                const double up = qa_question_loss(m, params, question, 0.05);
                params.token_table[idx] = saved - step;
                const double down = qa_question_loss(m, params, question, 0.05);
                params.token_table[idx] = saved;
                worst = std::max(worst, rel_err((up - down) / (2 * step), g[d]));
            }
        ++accepted;
    }
    c.check(accepted >= 100, "fewer than 100 encoder-loss gradient points");
    c.check(worst <= kGradRelTol,
            "encoder loss: worst gradient error " + std::to_string(worst));
}

// ---- criterion 4: pruned ranking equals the exhaustive one ------------------

void criterion_pruning(Checker& c) {
    Rng rng(707);
    const double alphas[] = {0.05, 0.3, 1.0};
    for (int instance = 0; instance < 60; ++instance) {
        const auto kg = graph_from(random_multigraph_kb(rng, 26));
        const auto family =
            rng.coin() ? KgeFamily::Multiplicative : KgeFamily::Additive;
        const auto kind =
            family == KgeFamily::Additive ? SpaceKind::Real : SpaceKind::Complex;
        const auto m = random_model(family, kind, 6, kg.entity_count(), kg.relation_count(),
                                    rng.next());
        std::vector<double> q(m.width());
        for (auto& v : q) v = rng.uniform(-1.0, 1.0);

        AnswerConfig config;
        config.alpha = alphas[rng.below(3)];
        config.max_hops = 1 + static_cast<int>(rng.below(3));
        config.path_cap = rng.coin() ? 16 : 4;
        config.mode = rng.coin() ? ScoreMode::Full : ScoreMode::SigmoidPath;
        config.path_policy =
            rng.coin() ? PathPolicy::LexicographicFirst : PathPolicy::MaxCorrelation;
        const auto topic = static_cast<EntityId>(rng.below(kg.entity_count()));

        const auto ranked = rank_candidates(kg, m, q, topic, config);

        // exhaustive reference: a path term for every single candidate
        EntityId best_entity = 0;
        double best_total = -1e300;
        bool first = true;
        for (EntityId e = 0; e < kg.entity_count(); ++e) {
            const auto paths = shortest_relation_paths(kg, topic, e,
                                                       config.max_hops,
                                                       static_cast<int>(config.path_cap));
            const auto scored = combined_score(m, topic, q, e, paths, config);
            if (first || scored.total > best_total ||
                (scored.total == best_total && e < best_entity)) {
                best_entity = e;
                best_total = scored.total;
                first = false;
            }
        }
        c.check(ranked[0].entity == best_entity,
                "instance " + std::to_string(instance) + ": pruned argmax " +
                    std::to_string(ranked[0].entity) + " != exhaustive " +
                    std::to_string(best_entity));
        c.check(std::abs(ranked[0].total - best_total) <= 1e-12,
                "instance " + std::to_string(instance) + ": winner totals diverge");
    }
}

// ---- criterion 5: desk-scale end-to-end -------------------------------------

struct SeedOutcome {
    double full_1hop = 0.0;
    std::map<int, double> half_full, half_nopath;
};

double mode_hits(const EvalReport& report, int hop, ScoreMode mode) {
    for (const auto& h : report.hops)
        if (h.hop_class == hop)
            for (const auto& m : h.modes)
                if (m.mode == mode) return m.hits;
    throw std::runtime_error("mode missing from report");
}

void criterion_end_to_end(Checker& c) {
    TempDir tmp;
    std::vector<SeedOutcome> outcomes;
    for (std::uint64_t seed = 7; seed <= 11; ++seed) {
        const auto data = generate_synthetic(200, 6, {1, 2}, seed);
        const auto dir = tmp.sub("seed-" + std::to_string(seed));
        write_synthetic(data, dir);

        ExperimentConfig config;
        config.kb_path = dir + "/kb.txt";
        for (int hop : {1, 2})
            config.qa[hop] = {dir + "/qa_" + std::to_string(hop) + "hop_train.txt",
                              dir + "/qa_" + std::to_string(hop) + "hop_valid.txt",
                              dir + "/qa_" + std::to_string(hop) + "hop_test.txt"};
        config.family = KgeFamily::Multiplicative;
        config.kge.dim = 48;
        config.kge.epochs = 400;
        config.kge.batch_size = 16;
        config.kge.learning_rate = 1.0;
        config.kge.negatives_per_positive = 10;
        config.kge.multiplicative_space = SpaceKind::Complex;
        config.qa_train.epochs = 300;
        config.qa_train.batch_size = 16;
        config.qa_train.learning_rate = 1.0;
        config.qa_train.token_dim = 64;
        config.qa_train.hidden_dim = 64;
        // the default weight (0.1) bounds the path term well below this
        // scale's triple-score gaps; 0.5 with best-path selection lets
        // correlations actually rerank while every seed stays above the gate
        config.answer.alpha = 0.5;
        config.answer.path_policy = PathPolicy::MaxCorrelation;
        config.seed = seed;

        SeedOutcome outcome;
        const auto full_report = run_experiment(config);
        outcome.full_1hop = mode_hits(full_report, 1, ScoreMode::Full);

        config.kg_half = true;
        const auto half_report = run_experiment(config);
        for (int hop : {1, 2}) {
            outcome.half_full[hop] = mode_hits(half_report, hop, ScoreMode::Full);
            outcome.half_nopath[hop] = mode_hits(half_report, hop, ScoreMode::NoPath);
        }
        outcomes.push_back(outcome);
        std::cout << "      seed " << seed << ": full-kg 1-hop " << fmt2(outcome.full_1hop)
                  << " | half-kg full " << fmt2(outcome.half_full[1]) << "/"
                  << fmt2(outcome.half_full[2]) << " no-path "
                  << fmt2(outcome.half_nopath[1]) << "/" << fmt2(outcome.half_nopath[2])
                  << "\n"
                  << std::flush;
    }

    double full_mean = 0.0, half_full_mean = 0.0, half_nopath_mean = 0.0;
    for (const auto& o : outcomes) {
        full_mean += o.full_1hop;
        for (int hop : {1, 2}) {
            half_full_mean += o.half_full.at(hop);
            half_nopath_mean += o.half_nopath.at(hop);
        }
    }
    full_mean /= outcomes.size();
    half_full_mean /= 2.0 * outcomes.size();
    half_nopath_mean /= 2.0 * outcomes.size();
    std::cout << "      means: full-kg 1-hop " << fmt2(full_mean) << " | half-kg full "
              << fmt2(half_full_mean) << " vs no-path " << fmt2(half_nopath_mean) << "\n";

    c.check(full_mean >= kFullKg1HopGate,
            "full-graph mean 1-hop Hits@1 " + fmt2(full_mean) + " is below " +
                fmt1(kFullKg1HopGate));
    c.check(half_full_mean >= half_nopath_mean,
            "on the halved graph the path term did not help: full " + fmt2(half_full_mean) +
                " vs no-path " + fmt2(half_nopath_mean));
}

// ---- criterion 6: ablation wiring -------------------------------------------

void criterion_ablation(Checker& c) {
    const auto data = generate_synthetic(40, 3, {1}, 5);
    KgeTrainConfig kge;
    kge.dim = 12;
    kge.seed = 9;
    const auto model = initial_kge_model(data.kg, KgeFamily::Multiplicative, kge);
    QaTrainConfig qa;
    qa.token_dim = 12;
    qa.hidden_dim = 10;
    qa.seed = 3;
    const auto params = initial_encoder(model, data.hops.at(1).train.records, qa);

    std::size_t with_path = 0;
    const auto& records = data.hops.at(1).test.records;
    for (std::size_t i = 0; i < std::min<std::size_t>(records.size(), 25); ++i) {
        const auto q = encode_question(params, records[i].tokens);

        AnswerConfig zero_alpha;
        zero_alpha.alpha = 0.0;
        zero_alpha.mode = ScoreMode::Full;
        AnswerConfig no_path;
        no_path.alpha = 0.7;
        no_path.mode = ScoreMode::NoPath;
        const auto a = rank_candidates(data.kg, model, q, records[i].topic, zero_alpha);
        const auto b = rank_candidates(data.kg, model, q, records[i].topic, no_path);
        bool identical = a.size() == b.size();
        for (std::size_t j = 0; identical && j < a.size(); ++j)
            identical = a[j].entity == b[j].entity && a[j].total == b[j].total &&
                        b[j].path_term == 0.0 && !b[j].explanation;
        c.check(identical, "question " + std::to_string(i) +
                               ": zero-weight ranking differs from the no-path mode");

        AnswerConfig sigmoid;
        sigmoid.alpha = 0.3;
        sigmoid.mode = ScoreMode::SigmoidPath;
        bool range_ok = true;
        for (const auto& cand : rank_candidates(data.kg, model, q, records[i].topic, sigmoid)) {
            if (cand.explanation) {
                range_ok &= cand.path_term > 0.0 && cand.path_term < 1.0;
                ++with_path;
            } else {
                range_ok &= cand.path_term == 0.0;
            }
            range_ok &= cand.total == cand.triple_score + sigmoid.alpha * cand.path_term;
        }
        c.check(range_ok, "question " + std::to_string(i) +
                              ": sigmoid correlation left its range");
    }
    c.check(with_path >= 25, "too few candidates carried a path to test the sigmoid range");
}

// ---- criterion 7: full-dataset replication ----------------------------------

void criterion_replication(Checker& c, const std::string& dir) {
    ExperimentConfig config;
    config.kb_path = dir + "/kb.txt";
    for (int hop : {1, 2, 3})
        config.qa[hop] = {dir + "/qa_" + std::to_string(hop) + "hop_train.txt",
                          dir + "/qa_" + std::to_string(hop) + "hop_valid.txt",
                          dir + "/qa_" + std::to_string(hop) + "hop_test.txt"};
    config.family = KgeFamily::Multiplicative;
    config.kge.multiplicative_space = SpaceKind::Complex;
    // all remaining knobs stay at their published defaults (dim 200, hidden
    // width 256, alpha 0.1, batch 128, learning rate 0.0005)

    for (const bool half : {false, true}) {
        config.kg_half = half;
        const auto report = run_experiment(config);
        const double* reference = half ? kReferenceHalf : kReferenceFull;
        for (int hop : {1, 2, 3}) {
            const double hits = mode_hits(report, hop, ScoreMode::Full);
            c.check(std::abs(hits - reference[hop - 1]) <= kReplicationTol,
                    std::string(half ? "half" : "full") + " graph, " + std::to_string(hop) +
                        "-hop: " + fmt2(hits) + " not within " + fmt1(kReplicationTol) +
                        " of " + fmt1(reference[hop - 1]));
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::string dataset_dir;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--dataset-dir" && i + 1 < argc) dataset_dir = argv[++i];
    }
    if (dataset_dir.empty())
        if (const char* env = std::getenv("PATHQA_DATASET_DIR")) dataset_dir = env;

    struct Criterion {
        int number;
        std::string title;
        std::function<void(Checker&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "module property suite (bounds, involutions, round trips, seeded determinism)",
         criterion_properties},
        {2, "shortest-path enumeration matches brute force on 220 random multigraphs",
         criterion_path_oracle},
        {3, "loss gradients match central finite differences (3 embedding families + encoder)",
         criterion_gradients},
        {4, "pruned answer ranking equals exhaustive path scoring on 60 random instances",
         criterion_pruning},
        {5, "desk-scale pipeline: 1-hop >= 90 on the full graph; paths help on the half graph",
         criterion_end_to_end},
        {6, "ablation wiring: zero-weight ranking == no-path; sigmoid terms stay in (0,1)",
         criterion_ablation},
    };

    bool any_failed = false;
    for (const auto& criterion : criteria) {
        Checker checker;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.run(checker);
        } catch (const std::exception& e) {
            checker.failures.push_back(std::string("unexpected exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double budget = kBudgetSeconds[criterion.number - 1];
        if (elapsed > budget)
            checker.failures.push_back("runtime " + fmt1(elapsed) + "s exceeded the " +
                                       fmt1(budget) + "s budget");

        const bool ok = checker.failures.empty();
        any_failed |= !ok;
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << criterion.number << ". " << criterion.title
                  << " (" << fmt1(elapsed) << "s, " << checker.passed << " checks)\n";
        std::size_t shown = 0;
        for (const auto& failure : checker.failures) {
            if (shown++ == 6) {
                std::cout << "       ... and " << checker.failures.size() - 6 << " more\n";
                break;
            }
            std::cout << "       - " << failure << "\n";
        }
        std::cout << std::flush;
    }

    if (dataset_dir.empty()) {
        std::cout << "[SKIP] 7. full-dataset replication against reference accuracies"
                     " (pass --dataset-dir DIR with kb.txt and qa_<h>hop_<split>.txt)\n";
    } else {
        Checker checker;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion_replication(checker, dataset_dir);
        } catch (const std::exception& e) {
            checker.failures.push_back(std::string("unexpected exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool ok = checker.failures.empty();
        any_failed |= !ok;
        std::cout << (ok ? "[PASS] " : "[FAIL] ")
                  << "7. full-dataset replication against reference accuracies ("
                  << fmt1(elapsed) << "s)\n";
        for (const auto& failure : checker.failures) std::cout << "       - " << failure << "\n";
    }

    std::cout << (any_failed ? "acceptance: FAILED\n" : "acceptance: OK\n");
    return any_failed ? 1 : 0;
}
