#include "pathqa/eval.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pathqa/errors.hpp"
#include "pathqa/parallel.hpp"
#include "pathqa/paths.hpp"
#include "pathqa/rng.hpp"

namespace pathqa {

double hits_at_1(const std::vector<EntityId>& predictions,
                 const std::vector<std::vector<EntityId>>& gold) {
    if (predictions.size() != gold.size())
        throw ContractError("predictions and gold sets differ in length");
    if (predictions.empty()) throw ContractError("no predictions to score");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (gold[i].empty()) throw ContractError("empty gold answer set");
        if (std::find(gold[i].begin(), gold[i].end(), predictions[i]) != gold[i].end()) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

namespace {

constexpr int kSequencesPerEntity = 6;  // multi-hop questions sampled per topic

std::uint64_t pow_u64(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

struct PoolEntry {
    std::string line;
    std::vector<RelationId> path;
};

}  // namespace

SyntheticData generate_synthetic(std::size_t entities, std::size_t relations,
                                 const std::set<int>& hops, std::uint64_t seed) {
    if (entities < 20) throw ContractError("synthetic graphs need at least 20 entities");
    if (relations < 2) throw ContractError("synthetic graphs need at least 2 relations");
    if (hops.empty()) throw ContractError("at least one hop class is required");
    for (int h : hops)
        if (h < 1 || h > 3) throw ContractError("hop classes must be 1, 2 or 3");

    SyntheticData data;

    // every (entity, relation) pair gets one or two distinct non-self targets,
    // so questions of any hop depth always have answers
    Rng graph_rng(derive_seed(seed, "synth/graph"));
    std::vector<std::vector<std::vector<std::size_t>>> edges(
        entities, std::vector<std::vector<std::size_t>>(relations));
    for (std::size_t e = 0; e < entities; ++e) {
        for (std::size_t k = 0; k < relations; ++k) {
            const std::size_t count = graph_rng.coin() ? 2 : 1;
            auto& targets = edges[e][k];
            while (targets.size() < count) {
                const auto t = static_cast<std::size_t>(graph_rng.below(entities));
                if (t == e || std::find(targets.begin(), targets.end(), t) != targets.end())
                    continue;
                targets.push_back(t);
            }
            for (std::size_t t : targets) {
                data.kb_text += "ent" + std::to_string(e) + "|rel_" + std::to_string(k) + "|ent" +
                                std::to_string(t) + "\n";
            }
        }
    }

    {
        std::istringstream in(data.kb_text);
        data.kg = load_kb(in);
    }
    std::vector<EntityId> ent_id(entities);
    for (std::size_t e = 0; e < entities; ++e)
        ent_id[e] = *data.kg.find_entity("ent" + std::to_string(e));
    std::vector<RelationId> rel_id(relations);
    for (std::size_t k = 0; k < relations; ++k)
        rel_id[k] = *data.kg.find_relation("rel_" + std::to_string(k));

    for (int h : hops) {
        // enumerate (1-hop) or sample (multi-hop) relation sequences per topic
        Rng question_rng(derive_seed(seed, "synth/questions/" + std::to_string(h)));
        std::vector<PoolEntry> pool;
        for (std::size_t e = 0; e < entities; ++e) {
            std::vector<std::vector<std::size_t>> sequences;
            if (h == 1) {
                for (std::size_t k = 0; k < relations; ++k) sequences.push_back({k});
            } else {
                const std::uint64_t total = pow_u64(relations, h);
                const std::size_t want =
                    std::min<std::size_t>(kSequencesPerEntity, static_cast<std::size_t>(total));
                std::set<std::uint64_t> chosen;
                while (chosen.size() < want) chosen.insert(question_rng.below(total));
                for (std::uint64_t index : chosen) {
                    std::vector<std::size_t> seq(h);
                    std::uint64_t rest = index;
                    for (int d = h - 1; d >= 0; --d) {
                        seq[d] = static_cast<std::size_t>(rest % relations);
                        rest /= relations;
                    }
                    sequences.push_back(std::move(seq));
                }
            }

            for (const auto& seq : sequences) {
                // exhaustive traversal: the generator is its own gold oracle
                std::vector<std::size_t> frontier{e};
                for (std::size_t k : seq) {
                    std::vector<std::size_t> next;
                    for (std::size_t node : frontier)
                        for (std::size_t t : edges[node][k]) next.push_back(t);
                    std::sort(next.begin(), next.end());
                    next.erase(std::unique(next.begin(), next.end()), next.end());
                    frontier = std::move(next);
                }
                std::vector<EntityId> gold;
                for (std::size_t node : frontier) gold.push_back(ent_id[node]);
                std::sort(gold.begin(), gold.end());

                // phrase reads answer-first: "rel_b of rel_a" walks rel_a, then rel_b
                std::string phrase;
                for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
                    if (!phrase.empty()) phrase += " of ";
                    phrase += "rel_" + std::to_string(*it);
                }

                PoolEntry entry;
                entry.line = "which entity is " + phrase + " of [ent" + std::to_string(e) + "]\t";
                for (std::size_t i = 0; i < gold.size(); ++i) {
                    if (i) entry.line += "|";
                    entry.line += data.kg.entity_name(gold[i]);
                }
                for (std::size_t k : seq) entry.path.push_back(rel_id[k]);
                pool.push_back(std::move(entry));
            }
        }

        const std::size_t n = pool.size();
        const std::size_t n_test = n / 10, n_valid = n / 10;
        const std::size_t n_train = n - n_test - n_valid;
        if (n_test == 0 || n_valid == 0 || n_train == 0)
            throw ContractError("too few questions for an 8/1/1 split at hop " +
                                std::to_string(h));

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng split_rng(derive_seed(seed, "synth/split/" + std::to_string(h)));
        split_rng.shuffle(order);

        SyntheticHopData hop_data;
        auto fill = [&](SyntheticSplit& split, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                split.text += pool[order[i]].line + "\n";
                split.gold_paths.push_back(pool[order[i]].path);
            }
            std::istringstream in(split.text);
            split.records = parse_qa_file(in, data.kg);
            if (split.records.size() != split.gold_paths.size())
                throw ContractError("generated split failed to round-trip through the parser");
        };
        fill(hop_data.train, 0, n_train);
        fill(hop_data.valid, n_train, n_train + n_valid);
        fill(hop_data.test, n_train + n_valid, n);
        data.hops.emplace(h, std::move(hop_data));
    }
    return data;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("failed while writing " + path);
}

}  // namespace

void write_synthetic(const SyntheticData& data, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
    write_file(dir + "/kb.txt", data.kb_text);
    for (const auto& [h, hop_data] : data.hops) {
        const std::string stem = dir + "/qa_" + std::to_string(h) + "hop_";
        write_file(stem + "train.txt", hop_data.train.text);
        write_file(stem + "valid.txt", hop_data.valid.text);
        write_file(stem + "test.txt", hop_data.test.text);
    }
}

namespace {

template <class F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what());
    }
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

std::string report_json(const EvalReport& report) {
    nlohmann::json j;
    j["kb"] = report.kb_path;
    j["kg_half"] = report.kg_half;
    j["family"] = report.family;
    j["kg"] = {{"entities", report.kg_entities},
               {"relations", report.kg_relations},
               {"triples", report.kg_triples}};
    j["seeds"] = {{"root", report.root_seed},
                  {"half", report.half_seed},
                  {"kge", report.kge_seed},
                  {"qa", report.qa_seed}};
    j["splits"] = nlohmann::json::object();
    for (const auto& [hop, sizes] : report.split_sizes)
        j["splits"][std::to_string(hop)] = {{"train", sizes[0]},
                                            {"valid", sizes[1]},
                                            {"test", sizes[2]}};
    j["training"] = {{"kge_heldout_gap", report.kge_heldout_gap},
                     {"qa_best_valid_hits", report.qa_best_valid_hits},
                     {"qa_best_epoch", report.qa_best_epoch}};
    j["wall_seconds"] = report.wall_seconds;
    j["results"] = nlohmann::json::array();
    for (const auto& hop : report.hops) {
        for (const auto& mode : hop.modes) {
            j["results"].push_back({{"hop", hop.hop_class},
                                    {"mode", to_string(mode.mode)},
                                    {"hits_at_1", mode.hits},
                                    {"questions", mode.questions},
                                    {"answered_with_path", mode.with_path}});
        }
    }
    return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "kb:        " << report.kb_path << "\n";
    out << "condition: " << (report.kg_half ? "half-kg" : "full-kg") << "\n";
    out << "family:    " << report.family << "\n";
    out << "seed:      " << report.root_seed << "\n\n";

    constexpr int kLabel = 14, kCell = 10;
    out << std::left << std::setw(kLabel) << "mode";
    for (const auto& hop : report.hops)
        out << std::right << std::setw(kCell) << (std::to_string(hop.hop_class) + "-hop");
    out << "\n";

    const std::size_t mode_rows = report.hops.empty() ? 0 : report.hops.front().modes.size();
    for (std::size_t m = 0; m < mode_rows; ++m) {
        out << std::left << std::setw(kLabel) << to_string(report.hops.front().modes[m].mode);
        for (const auto& hop : report.hops) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(2) << hop.modes[m].hits;
            out << std::right << std::setw(kCell) << cell.str();
        }
        out << "\n";
    }
    out << std::left << std::setw(kLabel) << "questions";
    for (const auto& hop : report.hops)
        out << std::right << std::setw(kCell)
            << (hop.modes.empty() ? 0 : hop.modes.front().questions);
    out << "\n";
    return out.str();
}

std::string prediction_log(const EvalReport& report, const KnowledgeGraph& kg) {
    std::string out =
        "hop\tmode\tquestion\tpredicted\tgold\ttriple_score\tpath_term\ttotal\tpath\n";
    for (const auto& hop : report.hops) {
        for (const auto& mode : hop.modes) {
            for (const auto& rec : mode.log) {
                out += std::to_string(hop.hop_class);
                out += "\t";
                out += to_string(mode.mode);
                out += "\t" + std::to_string(rec.question_index);
                out += "\t" + kg.entity_name(rec.predicted);
                out += "\t";
                for (std::size_t i = 0; i < rec.gold.size(); ++i) {
                    if (i) out += "|";
                    out += kg.entity_name(rec.gold[i]);
                }
                out += "\t" + format_double(rec.triple_score);
                out += "\t" + format_double(rec.path_term);
                out += "\t" + format_double(rec.total);
                out += "\t" + rec.rendered_path + "\n";
            }
        }
    }
    return out;
}

EvalReport run_experiment(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    EvalReport report;
    report.kb_path = config.kb_path;
    report.kg_half = config.kg_half;
    report.family = to_string(config.family);
    report.root_seed = config.seed;

    KnowledgeGraph kg = stage("load-kb", [&] { return load_kb_file(config.kb_path); });
    if (config.kg_half) {
        report.half_seed = derive_seed(config.seed, "kg/half");
        kg = stage("halve-kg", [&] { return kg.subsample_half(report.half_seed); });
    }
    report.kg_entities = kg.entity_count();
    report.kg_relations = kg.relation_count();
    report.kg_triples = kg.triple_count();

    // hop -> {train, valid, test} records
    std::map<int, std::array<std::vector<QuestionRecord>, 3>> qa = stage("load-qa", [&] {
        if (config.qa.empty()) throw ContractError("no question files configured");
        std::map<int, std::array<std::vector<QuestionRecord>, 3>> loaded;
        for (const auto& [hop, files] : config.qa) {
            if (hop < 1 || hop > 3) throw ContractError("hop classes must be 1, 2 or 3");
            loaded[hop] = {parse_qa_file(files.train, kg), parse_qa_file(files.valid, kg),
                           parse_qa_file(files.test, kg)};
        }
        return loaded;
    });
    for (const auto& [hop, splits] : qa)
        report.split_sizes[hop] = {splits[0].size(), splits[1].size(), splits[2].size()};

    KgeTrainConfig kge_cfg = config.kge;
    kge_cfg.seed = report.kge_seed = derive_seed(config.seed, "stage/kge");
    const KgeTrainResult kge = stage("train-kge", [&] {
        return train_kge(kg, config.family, kge_cfg);
    });
    report.kge_heldout_gap = kge.heldout_gap();

    QaTrainConfig qa_cfg = config.qa_train;
    qa_cfg.seed = report.qa_seed = derive_seed(config.seed, "stage/qa");
    std::vector<QuestionRecord> train_all, valid_all;
    for (const auto& [hop, splits] : qa) {
        train_all.insert(train_all.end(), splits[0].begin(), splits[0].end());
        valid_all.insert(valid_all.end(), splits[1].begin(), splits[1].end());
    }
    const QaTrainResult qa_result = stage("train-qa", [&] {
        return train_qa(kg, kge.model, train_all, valid_all, qa_cfg, config.threads);
    });
    report.qa_best_valid_hits = qa_result.best_valid_hits;
    report.qa_best_epoch = qa_result.best_epoch;

    stage("evaluate", [&] {
        for (const auto& [hop, splits] : qa) {
            const auto& test = splits[2];
            if (test.empty())
                throw ContractError("empty test split for hop " + std::to_string(hop));

            std::vector<std::vector<double>> qvec(test.size());
            parallel_for(test.size(), config.threads, [&](std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i)
                    qvec[i] = encode_question(qa_result.encoder, test[i].tokens);
            });

            HopEval hop_eval;
            hop_eval.hop_class = hop;
            for (ScoreMode mode :
                 {ScoreMode::Full, ScoreMode::NoPath, ScoreMode::SigmoidPath}) {
                AnswerConfig ac = config.answer;
                ac.mode = mode;
                ModeEval mode_eval;
                mode_eval.mode = mode;
                mode_eval.questions = test.size();
                mode_eval.log.resize(test.size());
                parallel_for(test.size(), config.threads,
                             [&](std::size_t begin, std::size_t end) {
                                 for (std::size_t i = begin; i < end; ++i) {
                                     const auto ranked =
                                         rank_candidates(kg, kge.model, qvec[i], test[i].topic,
                                                         ac, 1);
                                     const ScoredCandidate& top = ranked.front();
                                     PredictionRecord& rec = mode_eval.log[i];
                                     rec.question_index = i;
                                     rec.predicted = top.entity;
                                     rec.gold = test[i].answers;
                                     rec.triple_score = top.triple_score;
                                     rec.path_term = top.path_term;
                                     rec.total = top.total;
                                     if (top.explanation)
                                         rec.rendered_path = render_explanation(kg, *top.explanation);
                                 }
                             });
                std::vector<EntityId> predictions;
                std::vector<std::vector<EntityId>> gold;
                for (const auto& rec : mode_eval.log) {
                    predictions.push_back(rec.predicted);
                    gold.push_back(rec.gold);
                    if (!rec.rendered_path.empty()) ++mode_eval.with_path;
                }
                mode_eval.hits = hits_at_1(predictions, gold);
                hop_eval.modes.push_back(std::move(mode_eval));
            }
            report.hops.push_back(std::move(hop_eval));
        }
        return 0;
    });

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!config.output_dir.empty()) {
        stage("write-report", [&] {
            std::error_code ec;
            std::filesystem::create_directories(config.output_dir, ec);
            if (ec)
                throw IoError("cannot create directory " + config.output_dir + ": " +
                              ec.message());
            write_file(config.output_dir + "/report.json", report_json(report));
            write_file(config.output_dir + "/report.txt", report_table(report));
            write_file(config.output_dir + "/predictions.tsv", prediction_log(report, kg));
            return 0;
        });
    }
    return report;
}

}  // namespace pathqa
