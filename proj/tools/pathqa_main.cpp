// Command-line driver: dataset generation, embedding training, encoder
// training, answering, and the ablation harness. Every run writes a manifest
// with resolved config, seeds, and input/output checksums.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "pathqa/embedding.hpp"
#include "pathqa/encoder.hpp"
#include "pathqa/errors.hpp"
#include "pathqa/eval.hpp"
#include "pathqa/kg.hpp"
#include "pathqa/kge_train.hpp"
#include "pathqa/manifest.hpp"
#include "pathqa/parallel.hpp"
#include "pathqa/paths.hpp"
#include "pathqa/qa_data.hpp"
#include "pathqa/qa_train.hpp"
#include "pathqa/rng.hpp"
#include "pathqa/scorer.hpp"

namespace {

using namespace pathqa;
using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

KgeFamily to_family(const std::string& name) {
    if (name == "additive") return KgeFamily::Additive;
    if (name == "multiplicative") return KgeFamily::Multiplicative;
    if (name == "rotation") return KgeFamily::HadamardRotation;
    throw ContractError("unknown family: " + name);
}

SpaceKind to_space(const std::string& name) {
    if (name == "real") return SpaceKind::Real;
    if (name == "complex") return SpaceKind::Complex;
    throw ContractError("unknown space: " + name);
}

ScoreMode to_mode(const std::string& name) {
    if (name == "full") return ScoreMode::Full;
    if (name == "no-path") return ScoreMode::NoPath;
    if (name == "sigmoid-path") return ScoreMode::SigmoidPath;
    throw ContractError("unknown mode: " + name);
}

PathPolicy to_policy(const std::string& name) {
    if (name == "lex-first") return PathPolicy::LexicographicFirst;
    if (name == "max-correlation") return PathPolicy::MaxCorrelation;
    throw ContractError("unknown path policy: " + name);
}

// Manifest location: explicit flag > derived from --out > current directory.
std::string manifest_path(const std::string& explicit_path, const std::string& command,
                          const std::string& out, bool out_is_dir) {
    if (!explicit_path.empty()) return explicit_path;
    if (!out.empty()) {
        if (out_is_dir) return (std::filesystem::path(out) / "manifest.json").string();
        return out + ".manifest.json";
    }
    return "pathqa-" + command + "-manifest.json";
}

void write_manifest(RunManifest& manifest, const std::string& path, Clock::time_point t0) {
    manifest.timings_seconds["total"] = seconds_between(t0, Clock::now());
    manifest.write(path);
    std::cerr << "manifest: " << path << "\n";
}

std::string_view trimmed(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

struct ConfigItem {
    std::string key, value;
    std::size_t line = 0;
};

// Flat `key = value` lines; '#' or ';' starts a comment line. Values may be
// quoted. Repeated keys are kept in order (they feed repeatable flags).
std::vector<ConfigItem> read_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::vector<ConfigItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto stripped = trimmed(line);
        if (stripped.empty() || stripped.front() == '#' || stripped.front() == ';') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected key = value in config", line_no);
        const auto key = trimmed(stripped.substr(0, eq));
        auto value = trimmed(stripped.substr(eq + 1));
        if (key.empty()) throw ParseError("empty config key", line_no);
        if (key == "config") throw ParseError("config files cannot nest", line_no);
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
            value.back() == value.front())
            value = value.substr(1, value.size() - 2);
        items.push_back({std::string(key), std::string(value), line_no});
    }
    return items;
}

bool truthy(const ConfigItem& item) {
    const auto& v = item.value;
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw ParseError("flag '" + item.key + "' needs a boolean, got '" + v + "'", item.line);
}

// Turns config lines into extra argv tokens for options the command line
// did not set, so explicit flags always win.
void apply_flat_config(CLI::App& app, std::vector<std::string>& args) {
    std::string config_path;
    std::string subcommand;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
        else if (subcommand.empty() && !args[i].empty() && args[i].front() != '-')
            subcommand = args[i];
    }
    if (config_path.empty()) return;
    CLI::App* sub = app.get_subcommand_no_throw(subcommand);
    if (!sub) return;  // let the parser report the unknown subcommand

    const std::vector<std::string> user_args = args;  // repeated config keys inject repeatedly
    for (const auto& item : read_flat_config(config_path)) {
        const std::string flag = "--" + item.key;
        bool given = false;
        for (const auto& a : user_args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
        if (given) continue;
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (opt && opt->get_expected_min() == 0) {  // a flag, not an option
            if (truthy(item)) args.push_back(flag);
        } else {
            args.push_back(flag + "=" + item.value);  // unknown keys fail in the parser
        }
    }
}

// `head|relation|tail` lines resolved against an existing vocabulary (unlike
// load_kb, which mints ids). Used for held-out link-prediction triples.
std::vector<Triple> parse_triples_with_vocab(const std::string& path, const KnowledgeGraph& kg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open triples file: " + path);
    std::vector<Triple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trimmed(line).empty()) continue;
        const auto bar1 = line.find('|');
        const auto bar2 = bar1 == std::string::npos ? std::string::npos : line.find('|', bar1 + 1);
        if (bar2 == std::string::npos || line.find('|', bar2 + 1) != std::string::npos)
            throw ParseError("expected head|relation|tail", line_no);
        const auto head = trimmed(std::string_view(line).substr(0, bar1));
        const auto rel = trimmed(std::string_view(line).substr(bar1 + 1, bar2 - bar1 - 1));
        const auto tail = trimmed(std::string_view(line).substr(bar2 + 1));
        const auto h = kg.find_entity(head);
        if (!h) throw ParseError("unknown entity '" + std::string(head) + "'", line_no);
        const auto r = kg.find_relation(rel);
        if (!r) throw ParseError("unknown relation '" + std::string(rel) + "'", line_no);
        const auto t = kg.find_entity(tail);
        if (!t) throw ParseError("unknown entity '" + std::string(tail) + "'", line_no);
        triples.push_back({*h, *r, *t});
    }
    if (triples.empty()) throw ContractError("no triples in " + path);
    return triples;
}

void check_model_matches(const EmbeddingModel& model, const KnowledgeGraph& kg) {
    if (model.entity_count() != kg.entity_count() || model.relation_count() != kg.relation_count())
        throw ContractError("model was trained on a different vocabulary (" +
                            std::to_string(model.entity_count()) + " entities / " +
                            std::to_string(model.relation_count()) + " relations vs graph's " +
                            std::to_string(kg.entity_count()) + " / " +
                            std::to_string(kg.relation_count()) + ")");
}

// ---------------------------------------------------------------- kg-stats

struct KgStatsOpts {
    std::string kb, config, manifest;
};

int run_kg_stats(const KgStatsOpts& o, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    RunManifest m;
    m.command = "kg-stats";
    m.argv = argv;
    m.config = {{"kb", o.kb}};

    const KnowledgeGraph kg = load_kb_file(o.kb);
    m.timings_seconds["load-kb"] = seconds_between(t0, Clock::now());
    m.add_input(o.kb);
    m.format_versions["graph"] = kGraphFormatVersion;

    std::cout << "entities:  " << kg.entity_count() << "\n"
              << "relations: " << kg.relation_count() << " ("
              << kg.relation_count() / 2 << " doubled with inverses)\n"
              << "triples:   " << kg.triple_count() << "\n"
              << "edges:     " << kg.edge_count() << " (both directions)\n";

    write_manifest(m, manifest_path(o.manifest, m.command, "", false), t0);
    return 0;
}

// ---------------------------------------------------------------- train-kge

struct TrainKgeOpts {
    std::string kb, out, config, manifest;
    std::string family = "multiplicative";
    std::string space = "complex";
    int dim = 200;
    int epochs = 100;
    int batch_size = 128;
    double lr = 0.0005;
    int negatives = 10;
    double margin = 6.0;
    bool kg_half = false;
    std::uint64_t seed = 42;
};

int run_train_kge(const TrainKgeOpts& o, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    auto last = t0;
    RunManifest m;
    m.command = "train-kge";
    m.argv = argv;
    m.config = {{"kb", o.kb},           {"family", o.family},
                {"space", o.space},     {"dim", fmt(o.dim)},
                {"epochs", fmt(o.epochs)}, {"batch-size", fmt(o.batch_size)},
                {"lr", fmt(o.lr)},      {"negatives", fmt(o.negatives)},
                {"margin", fmt(o.margin)}, {"kg-half", fmt(o.kg_half)},
                {"seed", fmt(o.seed)},  {"out", o.out}};
    m.root_seed = o.seed;

    KnowledgeGraph kg = load_kb_file(o.kb);
    m.add_input(o.kb);
    if (o.kg_half) {
        const auto half_seed = derive_seed(o.seed, "kg/half");
        m.derived_seeds["kg/half"] = half_seed;
        kg = kg.subsample_half(half_seed);
        std::cout << "kg-half: kept " << kg.triple_count() << " triples\n";
    }
    m.timings_seconds["load-kb"] = seconds_between(last, Clock::now());
    last = Clock::now();

    KgeTrainConfig cfg;
    cfg.dim = o.dim;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.learning_rate = o.lr;
    cfg.negatives_per_positive = o.negatives;
    cfg.margin = o.margin;
    cfg.multiplicative_space = to_space(o.space);
    cfg.seed = o.seed;
    m.derived_seeds["kge"] = o.seed;

    const auto result = train_kge(kg, to_family(o.family), cfg);
    m.timings_seconds["train"] = seconds_between(last, Clock::now());
    last = Clock::now();

    result.model.save_checkpoint(o.out, kg);
    m.add_output(o.out);
    m.add_output(o.out + ".vocab");
    m.format_versions["model"] = kModelFormatVersion;
    m.timings_seconds["save"] = seconds_between(last, Clock::now());

    std::cout << "family: " << o.family << "  dim: " << o.dim << "  entities: "
              << kg.entity_count() << "  relations: " << kg.relation_count() << "\n"
              << std::fixed << std::setprecision(4)
              << "last epoch loss: " << result.last_epoch_loss << "\n"
              << "held-out score gap: " << result.heldout_gap() << " (observed "
              << result.heldout_observed_mean << " vs corrupted "
              << result.heldout_corrupted_mean << " over " << result.heldout_count
              << " triples)\n"
              << "wrote " << o.out << " (+ .vocab sidecar)\n";

    write_manifest(m, manifest_path(o.manifest, m.command, o.out, false), t0);
    return 0;
}

// ---------------------------------------------------------------- eval-kge

struct EvalKgeOpts {
    std::string kb, model, test, config, manifest;
    int threads = 0;
};

int run_eval_kge(const EvalKgeOpts& o, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    RunManifest m;
    m.command = "eval-kge";
    m.argv = argv;
    m.config = {{"kb", o.kb}, {"model", o.model}, {"test", o.test}, {"threads", fmt(o.threads)}};

    const KnowledgeGraph kg = load_kb_file(o.kb);
    const EmbeddingModel model = EmbeddingModel::load_checkpoint(o.model);
    check_model_matches(model, kg);
    m.add_input(o.kb);
    m.add_input(o.model);
    m.format_versions["model"] = kModelFormatVersion;

    std::vector<Triple> test;
    std::vector<Triple> all = kg.triples();
    if (o.test.empty()) {
        test = kg.triples();  // memorization probe over the training graph
    } else {
        test = parse_triples_with_vocab(o.test, kg);
        all.insert(all.end(), test.begin(), test.end());
        m.add_input(o.test);
    }

    const auto metrics = link_prediction_eval(model, test, all, o.threads);
    m.timings_seconds["evaluate"] = seconds_between(t0, Clock::now());

    std::cout << std::fixed << std::setprecision(2)
              << "filtered Hits@1:  " << 100.0 * metrics.hits_at_1 << "%\n"
              << "filtered Hits@10: " << 100.0 * metrics.hits_at_10 << "%\n"
              << std::setprecision(4) << "filtered MRR:     " << metrics.mrr << "\n"
              << "test triples:     " << metrics.test_count
              << (o.test.empty() ? " (training graph itself)" : "") << "\n";

    write_manifest(m, manifest_path(o.manifest, m.command, "", false), t0);
    return 0;
}

// ---------------------------------------------------------------- train-qa

struct TrainQaOpts {
    std::string kb, model, qa_train, qa_valid, out, config, manifest;
    int epochs = 100;
    int batch_size = 128;
    double lr = 0.0005;
    double label_smoothing = 0.05;
    int token_dim = 256;
    int hidden_dim = 256;
    bool skip_unresolvable = false;
    std::uint64_t seed = 42;
    int threads = 0;
};

int run_train_qa(const TrainQaOpts& o, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    auto last = t0;
    RunManifest m;
    m.command = "train-qa";
    m.argv = argv;
    m.config = {{"kb", o.kb},
                {"model", o.model},
                {"qa-train", o.qa_train},
                {"qa-valid", o.qa_valid},
                {"epochs", fmt(o.epochs)},
                {"batch-size", fmt(o.batch_size)},
                {"lr", fmt(o.lr)},
                {"label-smoothing", fmt(o.label_smoothing)},
                {"token-dim", fmt(o.token_dim)},
                {"hidden-dim", fmt(o.hidden_dim)},
                {"skip-unresolvable", fmt(o.skip_unresolvable)},
                {"seed", fmt(o.seed)},
                {"threads", fmt(o.threads)},
                {"out", o.out}};
    m.root_seed = o.seed;
    m.derived_seeds["qa"] = o.seed;

    const KnowledgeGraph kg = load_kb_file(o.kb);
    const EmbeddingModel model = EmbeddingModel::load_checkpoint(o.model);
    check_model_matches(model, kg);
    m.add_input(o.kb);
    m.add_input(o.model);

    QaParseOptions popt;
    popt.skip_unresolvable = o.skip_unresolvable;
    popt.log = &std::cerr;
    const auto train = parse_qa_file(o.qa_train, kg, popt);
    const auto valid = o.qa_valid.empty() ? train : parse_qa_file(o.qa_valid, kg, popt);
    m.add_input(o.qa_train);
    if (!o.qa_valid.empty()) m.add_input(o.qa_valid);
    m.timings_seconds["load"] = seconds_between(last, Clock::now());
    last = Clock::now();

    QaTrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.learning_rate = o.lr;
    cfg.label_smoothing = o.label_smoothing;
    cfg.token_dim = o.token_dim;
    cfg.hidden_dim = o.hidden_dim;
    cfg.seed = o.seed;

    const auto result = train_qa(kg, model, train, valid, cfg, o.threads);
    m.timings_seconds["train"] = seconds_between(last, Clock::now());
    last = Clock::now();

    result.encoder.save_file(o.out);
    m.add_output(o.out);
    m.format_versions["encoder"] = kEncoderFormatVersion;
    m.timings_seconds["save"] = seconds_between(last, Clock::now());

    std::cout << "train questions: " << train.size() << "  valid questions: " << valid.size()
              << "  vocab: " << result.encoder.vocab.size() << "\n"
              << std::fixed << std::setprecision(2) << "best valid Hits@1: "
              << result.best_valid_hits << "% at epoch " << result.best_epoch << "\n"
              << std::setprecision(4) << "last epoch loss: " << result.last_epoch_loss << "\n"
              << "wrote " << o.out << "\n";

    write_manifest(m, manifest_path(o.manifest, m.command, o.out, false), t0);
    return 0;
}

// ---------------------------------------------------------------- answer

struct AnswerOpts {
    std::string kb, model, encoder, question, config, manifest;
    double alpha = 0.1;
    int max_hops = 3;
    std::size_t path_cap = 16;
    std::string path_policy = "lex-first";
    std::string mode = "full";
    int top_k = 5;
    int threads = 0;
};

AnswerConfig answer_config(double alpha, int max_hops, std::size_t path_cap,
                           const std::string& policy, const std::string& mode) {
    AnswerConfig ac;
    ac.alpha = alpha;
    ac.max_hops = max_hops;
    ac.path_cap = path_cap;
    ac.path_policy = to_policy(policy);
    ac.mode = to_mode(mode);
    return ac;
}

int run_answer(const AnswerOpts& o, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    RunManifest m;
    m.command = "answer";
    m.argv = argv;
    m.config = {{"kb", o.kb},
                {"model", o.model},
                {"encoder", o.encoder},
                {"question", o.question},
                {"alpha", fmt(o.alpha)},
                {"max-hops", fmt(o.max_hops)},
                {"path-cap", fmt(o.path_cap)},
                {"path-policy", o.path_policy},
                {"mode", o.mode},
                {"top-k", fmt(o.top_k)},
                {"threads", fmt(o.threads)}};

    const KnowledgeGraph kg = load_kb_file(o.kb);
    const EmbeddingModel model = EmbeddingModel::load_checkpoint(o.model);
    check_model_matches(model, kg);
    const EncoderParams encoder = EncoderParams::load_file(o.encoder);
    m.add_input(o.kb);
    m.add_input(o.model);
    m.add_input(o.encoder);

    if (o.top_k < 1) throw ContractError("--top-k must be >= 1");
    const QuestionRecord record = parse_question(o.question, kg);
    const AnswerConfig ac =
        answer_config(o.alpha, o.max_hops, o.path_cap, o.path_policy, o.mode);
    const auto ranked = answer_question(kg, model, encoder, record, ac, o.threads);
    m.timings_seconds["answer"] = seconds_between(t0, Clock::now());

    std::cout << "question: " << record.raw << "\n"
              << "topic:    " << kg.entity_name(record.topic) << "\n";
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(o.top_k), ranked.size());
    for (std::size_t i = 0; i < k; ++i) {
        const auto& c = ranked[i];
        std::cout << std::setw(2) << (i + 1) << ". " << kg.entity_name(c.entity) << std::fixed
                  << std::setprecision(6) << "  total=" << c.total
                  << "  triple=" << c.triple_score << "  path-term=" << std::showpos
                  << c.path_term << std::noshowpos;
        if (c.explanation) std::cout << "  via " << render_explanation(kg, *c.explanation);
        std::cout << "\n";
    }

    write_manifest(m, manifest_path(o.manifest, m.command, "", false), t0);
    return 0;
}

// ---------------------------------------------------------------- eval-qa

struct EvalQaOpts {
    std::string kb, model, encoder, qa_test, out, config, manifest;
    double alpha = 0.1;
    int max_hops = 3;
    std::size_t path_cap = 16;
    std::string path_policy = "lex-first";
    std::string mode = "full";
    bool skip_unresolvable = false;
    int threads = 0;
};

int run_eval_qa(const EvalQaOpts& o, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    RunManifest m;
    m.command = "eval-qa";
    m.argv = argv;
    m.config = {{"kb", o.kb},
                {"model", o.model},
                {"encoder", o.encoder},
                {"qa-test", o.qa_test},
                {"alpha", fmt(o.alpha)},
                {"max-hops", fmt(o.max_hops)},
                {"path-cap", fmt(o.path_cap)},
                {"path-policy", o.path_policy},
                {"mode", o.mode},
                {"skip-unresolvable", fmt(o.skip_unresolvable)},
                {"threads", fmt(o.threads)},
                {"out", o.out}};

    const KnowledgeGraph kg = load_kb_file(o.kb);
    const EmbeddingModel model = EmbeddingModel::load_checkpoint(o.model);
    check_model_matches(model, kg);
    const EncoderParams encoder = EncoderParams::load_file(o.encoder);
    m.add_input(o.kb);
    m.add_input(o.model);
    m.add_input(o.encoder);

    QaParseOptions popt;
    popt.skip_unresolvable = o.skip_unresolvable;
    popt.log = &std::cerr;
    const auto test = parse_qa_file(o.qa_test, kg, popt);
    if (test.empty()) throw ContractError("no usable questions in " + o.qa_test);
    m.add_input(o.qa_test);

    const AnswerConfig ac =
        answer_config(o.alpha, o.max_hops, o.path_cap, o.path_policy, o.mode);

    std::vector<ScoredCandidate> top(test.size());
    std::vector<std::string> rendered(test.size());
    parallel_for(test.size(), o.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto ranked = answer_question(kg, model, encoder, test[i], ac, 1);
            top[i] = ranked.front();
            if (top[i].explanation) rendered[i] = render_explanation(kg, *top[i].explanation);
        }
    });
    m.timings_seconds["evaluate"] = seconds_between(t0, Clock::now());

    std::vector<EntityId> predictions(test.size());
    std::vector<std::vector<EntityId>> gold(test.size());
    std::size_t with_path = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        predictions[i] = top[i].entity;
        gold[i] = test[i].answers;
        if (top[i].explanation) ++with_path;
    }
    const double hits = hits_at_1(predictions, gold);

    std::cout << std::fixed << std::setprecision(2) << "Hits@1: " << hits << "% over "
              << test.size() << " questions (" << with_path << " answered with a path)\n";

    if (!o.out.empty()) {
        std::ofstream tsv(o.out, std::ios::binary);
        if (!tsv) throw IoError("cannot open predictions file: " + o.out);
        tsv << "question\tpredicted\tgold\ttriple_score\tpath_term\ttotal\tpath\n";
        tsv << std::setprecision(17);
        for (std::size_t i = 0; i < test.size(); ++i) {
            tsv << test[i].raw << '\t' << kg.entity_name(top[i].entity) << '\t';
            for (std::size_t a = 0; a < gold[i].size(); ++a)
                tsv << (a ? "|" : "") << kg.entity_name(gold[i][a]);
            tsv << '\t' << top[i].triple_score << '\t' << top[i].path_term << '\t'
                << top[i].total << '\t' << rendered[i] << '\n';
        }
        if (!tsv) throw IoError("failed writing predictions file: " + o.out);
        tsv.close();
        m.add_output(o.out);
        std::cout << "wrote " << o.out << "\n";
    }

    write_manifest(m, manifest_path(o.manifest, m.command, o.out, false), t0);
    return 0;
}

// ---------------------------------------------------------------- ablate

struct AblateOpts {
    std::string kb, out, config, manifest;
    std::vector<std::string> qa_train, qa_valid, qa_test;
    std::vector<int> hops;
    std::string family = "multiplicative";
    std::string space = "complex";
    int dim = 200;
    int epochs = 100;
    int batch_size = 128;
    double lr = 0.0005;
    int negatives = 10;
    double margin = 6.0;
    int qa_epochs = 100;
    int qa_batch_size = 128;
    double qa_lr = 0.0005;
    double label_smoothing = 0.05;
    int token_dim = 256;
    int hidden_dim = 256;
    double alpha = 0.1;
    int max_hops = 3;
    std::size_t path_cap = 16;
    std::string path_policy = "lex-first";
    bool kg_half = false;
    std::uint64_t seed = 42;
    int threads = 0;
};

int run_ablate(const AblateOpts& o, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    if (o.hops.empty()) throw ContractError("--hops needs at least one hop class");
    if (o.qa_train.size() != o.hops.size() || o.qa_valid.size() != o.hops.size() ||
        o.qa_test.size() != o.hops.size())
        throw ContractError("--qa-train/--qa-valid/--qa-test must each appear once per --hops "
                            "entry (" +
                            std::to_string(o.hops.size()) + " hop classes given)");

    RunManifest m;
    m.command = "ablate";
    m.argv = argv;
    m.root_seed = o.seed;

    ExperimentConfig ec;
    ec.kb_path = o.kb;
    for (std::size_t i = 0; i < o.hops.size(); ++i) {
        if (ec.qa.count(o.hops[i]))
            throw ContractError("hop class " + std::to_string(o.hops[i]) + " given twice");
        ec.qa[o.hops[i]] = {o.qa_train[i], o.qa_valid[i], o.qa_test[i]};
    }
    ec.kg_half = o.kg_half;
    ec.family = to_family(o.family);
    ec.kge.dim = o.dim;
    ec.kge.epochs = o.epochs;
    ec.kge.batch_size = o.batch_size;
    ec.kge.learning_rate = o.lr;
    ec.kge.negatives_per_positive = o.negatives;
    ec.kge.margin = o.margin;
    ec.kge.multiplicative_space = to_space(o.space);
    ec.qa_train.epochs = o.qa_epochs;
    ec.qa_train.batch_size = o.qa_batch_size;
    ec.qa_train.learning_rate = o.qa_lr;
    ec.qa_train.label_smoothing = o.label_smoothing;
    ec.qa_train.token_dim = o.token_dim;
    ec.qa_train.hidden_dim = o.hidden_dim;
    ec.answer.alpha = o.alpha;
    ec.answer.max_hops = o.max_hops;
    ec.answer.path_cap = o.path_cap;
    ec.answer.path_policy = to_policy(o.path_policy);
    ec.output_dir = o.out;
    ec.seed = o.seed;
    ec.threads = o.threads;

    m.config = {{"kb", o.kb},
                {"family", o.family},
                {"space", o.space},
                {"dim", fmt(o.dim)},
                {"epochs", fmt(o.epochs)},
                {"batch-size", fmt(o.batch_size)},
                {"lr", fmt(o.lr)},
                {"negatives", fmt(o.negatives)},
                {"margin", fmt(o.margin)},
                {"qa-epochs", fmt(o.qa_epochs)},
                {"qa-batch-size", fmt(o.qa_batch_size)},
                {"qa-lr", fmt(o.qa_lr)},
                {"label-smoothing", fmt(o.label_smoothing)},
                {"token-dim", fmt(o.token_dim)},
                {"hidden-dim", fmt(o.hidden_dim)},
                {"alpha", fmt(o.alpha)},
                {"max-hops", fmt(o.max_hops)},
                {"path-cap", fmt(o.path_cap)},
                {"path-policy", o.path_policy},
                {"kg-half", fmt(o.kg_half)},
                {"seed", fmt(o.seed)},
                {"threads", fmt(o.threads)},
                {"out", o.out}};
    for (std::size_t i = 0; i < o.hops.size(); ++i) {
        const auto h = std::to_string(o.hops[i]);
        m.config["qa-train." + h] = o.qa_train[i];
        m.config["qa-valid." + h] = o.qa_valid[i];
        m.config["qa-test." + h] = o.qa_test[i];
    }

    const EvalReport report = run_experiment(ec);
    std::cout << report_table(report);

    m.derived_seeds["stage/kge"] = report.kge_seed;
    m.derived_seeds["stage/qa"] = report.qa_seed;
    if (o.kg_half) m.derived_seeds["kg/half"] = report.half_seed;
    m.add_input(o.kb);
    for (std::size_t i = 0; i < o.hops.size(); ++i) {
        m.add_input(o.qa_train[i]);
        m.add_input(o.qa_valid[i]);
        m.add_input(o.qa_test[i]);
    }
    for (const char* name : {"report.json", "report.txt", "predictions.tsv"})
        m.add_output((std::filesystem::path(o.out) / name).string());
    m.timings_seconds["experiment"] = report.wall_seconds;

    write_manifest(m, manifest_path(o.manifest, m.command, o.out, true), t0);
    return 0;
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
    std::string out, config, manifest;
    std::size_t entities = 200;
    std::size_t relations = 6;
    std::vector<int> hops = {1, 2};
    std::uint64_t seed = 42;
};

int run_synth(const SynthOpts& o, const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    RunManifest m;
    m.command = "synth";
    m.argv = argv;
    m.root_seed = o.seed;
    m.config = {{"entities", fmt(o.entities)},
                {"relations", fmt(o.relations)},
                {"seed", fmt(o.seed)},
                {"out", o.out}};
    {
        std::string hops_str;
        for (int h : o.hops) hops_str += (hops_str.empty() ? "" : ",") + std::to_string(h);
        m.config["hops"] = hops_str;
    }

    const std::set<int> hop_set(o.hops.begin(), o.hops.end());
    const SyntheticData data = generate_synthetic(o.entities, o.relations, hop_set, o.seed);
    write_synthetic(data, o.out);

    m.derived_seeds["synth/graph"] = derive_seed(o.seed, "synth/graph");
    m.add_output((std::filesystem::path(o.out) / "kb.txt").string());
    std::cout << "kb: " << data.kg.entity_count() << " entities, " << data.kg.relation_count()
              << " relations, " << data.kg.triple_count() << " triples\n";
    for (const auto& [hop, splits] : data.hops) {
        const auto h = std::to_string(hop);
        m.derived_seeds["synth/questions/" + h] = derive_seed(o.seed, "synth/questions/" + h);
        m.derived_seeds["synth/split/" + h] = derive_seed(o.seed, "synth/split/" + h);
        for (const char* part : {"train", "valid", "test"})
            m.add_output(
                (std::filesystem::path(o.out) / ("qa_" + h + "hop_" + part + ".txt")).string());
        std::cout << hop << "-hop questions: " << splits.train.records.size() << " train / "
                  << splits.valid.records.size() << " valid / " << splits.test.records.size()
                  << " test\n";
    }
    std::cout << "wrote " << o.out << "\n";

    write_manifest(m, manifest_path(o.manifest, m.command, o.out, true), t0);
    return 0;
}

void add_config_and_manifest(CLI::App* sub, std::string& config, std::string& manifest) {
    sub->add_option("--config", config, "flat key = value file; command-line flags win");
    sub->add_option("--manifest", manifest, "run-manifest path (default: next to --out)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Path- and embedding-based question answering over knowledge graphs"};
    app.require_subcommand(1);
    const std::vector<std::string> args(argv, argv + argc);

    std::function<int()> action;

    const std::vector<std::string> families{"additive", "multiplicative", "rotation"};
    const std::vector<std::string> spaces{"real", "complex"};
    const std::vector<std::string> modes{"full", "no-path", "sigmoid-path"};
    const std::vector<std::string> policies{"lex-first", "max-correlation"};

    // kg-stats
    KgStatsOpts kgs;
    {
        auto* sub = app.add_subcommand("kg-stats", "Print knowledge-graph statistics");
        sub->add_option("--kb", kgs.kb, "knowledge-base triples file")->required();
        add_config_and_manifest(sub, kgs.config, kgs.manifest);
        sub->callback([&] { action = [&] { return run_kg_stats(kgs, args); }; });
    }

    // train-kge
    TrainKgeOpts tk;
    {
        auto* sub = app.add_subcommand("train-kge", "Train entity/relation embeddings");
        sub->add_option("--kb", tk.kb, "knowledge-base triples file")->required();
        sub->add_option("--family", tk.family, "score family")
            ->check(CLI::IsMember(families))
            ->capture_default_str();
        sub->add_option("--space", tk.space, "multiplicative family: real or complex components")
            ->check(CLI::IsMember(spaces))
            ->capture_default_str();
        sub->add_option("--dim", tk.dim, "embedding components per row")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--epochs", tk.epochs, "training epochs")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        sub->add_option("--batch-size", tk.batch_size, "positives per batch")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--lr", tk.lr, "learning rate")->capture_default_str();
        sub->add_option("--negatives", tk.negatives, "corruptions per positive")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--margin", tk.margin, "hinge margin (additive / rotation families)")
            ->capture_default_str();
        sub->add_flag("--kg-half", tk.kg_half, "train on a seeded half of the triples");
        sub->add_option("--seed", tk.seed, "root RNG seed")->capture_default_str();
        sub->add_option("--out", tk.out, "model checkpoint path")->required();
        add_config_and_manifest(sub, tk.config, tk.manifest);
        sub->callback([&] { action = [&] { return run_train_kge(tk, args); }; });
    }

    // eval-kge
    EvalKgeOpts ek;
    {
        auto* sub = app.add_subcommand("eval-kge", "Filtered link-prediction metrics");
        sub->add_option("--kb", ek.kb, "knowledge-base triples file")->required();
        sub->add_option("--model", ek.model, "model checkpoint")->required();
        sub->add_option("--test", ek.test,
                        "held-out triples file (default: score the training graph)");
        sub->add_option("--threads", ek.threads, "worker cap, 0 = machine parallelism")
            ->capture_default_str();
        add_config_and_manifest(sub, ek.config, ek.manifest);
        sub->callback([&] { action = [&] { return run_eval_kge(ek, args); }; });
    }

    // train-qa
    TrainQaOpts tq;
    {
        auto* sub = app.add_subcommand("train-qa", "Train the question encoder");
        sub->add_option("--kb", tq.kb, "knowledge-base triples file")->required();
        sub->add_option("--model", tq.model, "frozen embedding checkpoint")->required();
        sub->add_option("--qa-train", tq.qa_train, "training questions file")->required();
        sub->add_option("--qa-valid", tq.qa_valid,
                        "validation questions file (default: the training file)");
        sub->add_option("--epochs", tq.epochs, "training epochs")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        sub->add_option("--batch-size", tq.batch_size, "questions per batch")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--lr", tq.lr, "learning rate")->capture_default_str();
        sub->add_option("--label-smoothing", tq.label_smoothing, "answer label smoothing")
            ->capture_default_str();
        sub->add_option("--token-dim", tq.token_dim, "token embedding width")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--hidden-dim", tq.hidden_dim, "hidden layer width")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_flag("--skip-unresolvable", tq.skip_unresolvable,
                      "skip questions naming unknown entities instead of failing");
        sub->add_option("--seed", tq.seed, "root RNG seed")->capture_default_str();
        sub->add_option("--threads", tq.threads, "worker cap, 0 = machine parallelism")
            ->capture_default_str();
        sub->add_option("--out", tq.out, "encoder checkpoint path")->required();
        add_config_and_manifest(sub, tq.config, tq.manifest);
        sub->callback([&] { action = [&] { return run_train_qa(tq, args); }; });
    }

    // answer
    AnswerOpts an;
    {
        auto* sub = app.add_subcommand("answer", "Rank answers for one question");
        sub->add_option("--kb", an.kb, "knowledge-base triples file")->required();
        sub->add_option("--model", an.model, "model checkpoint")->required();
        sub->add_option("--encoder", an.encoder, "encoder checkpoint")->required();
        sub->add_option("--question", an.question, "question text with one [topic] mention")
            ->required();
        sub->add_option("--alpha", an.alpha, "path-term weight")->capture_default_str();
        sub->add_option("--max-hops", an.max_hops, "path search depth")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--path-cap", an.path_cap, "max shortest paths kept per candidate")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--path-policy", an.path_policy, "which shortest path represents")
            ->check(CLI::IsMember(policies))
            ->capture_default_str();
        sub->add_option("--mode", an.mode, "scoring mode")
            ->check(CLI::IsMember(modes))
            ->capture_default_str();
        sub->add_option("--top-k", an.top_k, "ranked candidates to print")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--threads", an.threads, "worker cap, 0 = machine parallelism")
            ->capture_default_str();
        add_config_and_manifest(sub, an.config, an.manifest);
        sub->callback([&] { action = [&] { return run_answer(an, args); }; });
    }

    // eval-qa
    EvalQaOpts eq;
    {
        auto* sub = app.add_subcommand("eval-qa", "Hits@1 of a trained pipeline on a test split");
        sub->add_option("--kb", eq.kb, "knowledge-base triples file")->required();
        sub->add_option("--model", eq.model, "model checkpoint")->required();
        sub->add_option("--encoder", eq.encoder, "encoder checkpoint")->required();
        sub->add_option("--qa-test", eq.qa_test, "test questions file")->required();
        sub->add_option("--alpha", eq.alpha, "path-term weight")->capture_default_str();
        sub->add_option("--max-hops", eq.max_hops, "path search depth")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--path-cap", eq.path_cap, "max shortest paths kept per candidate")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--path-policy", eq.path_policy, "which shortest path represents")
            ->check(CLI::IsMember(policies))
            ->capture_default_str();
        sub->add_option("--mode", eq.mode, "scoring mode")
            ->check(CLI::IsMember(modes))
            ->capture_default_str();
        sub->add_flag("--skip-unresolvable", eq.skip_unresolvable,
                      "skip questions naming unknown entities instead of failing");
        sub->add_option("--threads", eq.threads, "worker cap, 0 = machine parallelism")
            ->capture_default_str();
        sub->add_option("--out", eq.out, "per-question predictions TSV (optional)");
        add_config_and_manifest(sub, eq.config, eq.manifest);
        sub->callback([&] { action = [&] { return run_eval_qa(eq, args); }; });
    }

    // ablate
    AblateOpts ab;
    {
        auto* sub = app.add_subcommand(
            "ablate", "Full pipeline + three-mode evaluation, one report per run");
        sub->add_option("--kb", ab.kb, "knowledge-base triples file")->required();
        sub->add_option("--qa-train", ab.qa_train, "training questions, one per hop class")
            ->required();
        sub->add_option("--qa-valid", ab.qa_valid, "validation questions, one per hop class")
            ->required();
        sub->add_option("--qa-test", ab.qa_test, "test questions, one per hop class")->required();
        sub->add_option("--hops", ab.hops, "hop class of each qa file triple, e.g. --hops 1 2")
            ->required();
        sub->add_option("--family", ab.family, "score family")
            ->check(CLI::IsMember(families))
            ->capture_default_str();
        sub->add_option("--space", ab.space, "multiplicative family: real or complex components")
            ->check(CLI::IsMember(spaces))
            ->capture_default_str();
        sub->add_option("--dim", ab.dim, "embedding components per row")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--epochs", ab.epochs, "embedding training epochs")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        sub->add_option("--batch-size", ab.batch_size, "embedding positives per batch")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--lr", ab.lr, "embedding learning rate")->capture_default_str();
        sub->add_option("--negatives", ab.negatives, "corruptions per positive")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--margin", ab.margin, "hinge margin (additive / rotation families)")
            ->capture_default_str();
        sub->add_option("--qa-epochs", ab.qa_epochs, "encoder training epochs")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        sub->add_option("--qa-batch-size", ab.qa_batch_size, "encoder questions per batch")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--qa-lr", ab.qa_lr, "encoder learning rate")->capture_default_str();
        sub->add_option("--label-smoothing", ab.label_smoothing, "answer label smoothing")
            ->capture_default_str();
        sub->add_option("--token-dim", ab.token_dim, "token embedding width")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--hidden-dim", ab.hidden_dim, "hidden layer width")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--alpha", ab.alpha, "path-term weight")->capture_default_str();
        sub->add_option("--max-hops", ab.max_hops, "path search depth")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--path-cap", ab.path_cap, "max shortest paths kept per candidate")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--path-policy", ab.path_policy, "which shortest path represents")
            ->check(CLI::IsMember(policies))
            ->capture_default_str();
        sub->add_flag("--kg-half", ab.kg_half, "train on a seeded half of the triples");
        sub->add_option("--seed", ab.seed, "root RNG seed")->capture_default_str();
        sub->add_option("--threads", ab.threads, "worker cap, 0 = machine parallelism")
            ->capture_default_str();
        sub->add_option("--out", ab.out, "report directory")->required();
        add_config_and_manifest(sub, ab.config, ab.manifest);
        sub->callback([&] { action = [&] { return run_ablate(ab, args); }; });
    }

    // synth
    SynthOpts sy;
    {
        auto* sub = app.add_subcommand("synth", "Generate a synthetic KB + question splits");
        sub->add_option("--entities", sy.entities, "entity count (>= 20)")
            ->capture_default_str();
        sub->add_option("--relations", sy.relations, "relation count before inverses (>= 2)")
            ->capture_default_str();
        sub->add_option("--hops", sy.hops, "hop classes to generate")->capture_default_str();
        sub->add_option("--seed", sy.seed, "root RNG seed")->capture_default_str();
        sub->add_option("--out", sy.out, "output directory")->required();
        add_config_and_manifest(sub, sy.config, sy.manifest);
        sub->callback([&] { action = [&] { return run_synth(sy, args); }; });
    }

    std::vector<std::string> parse_args(argv + 1, argv + argc);
    try {
        apply_flat_config(app, parse_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        std::reverse(parse_args.begin(), parse_args.end());  // parse() pops from the back
        app.parse(std::move(parse_args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        return action ? action() : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
