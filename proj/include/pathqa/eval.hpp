#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pathqa/kg.hpp"
#include "pathqa/kge_train.hpp"
#include "pathqa/qa_data.hpp"
#include "pathqa/qa_train.hpp"
#include "pathqa/scorer.hpp"

namespace pathqa {

// Percentage of questions whose top-ranked prediction belongs to the gold set.
// Throws on length mismatch, empty input, or an empty gold set.
double hits_at_1(const std::vector<EntityId>& predictions,
                 const std::vector<std::vector<EntityId>>& gold);

// One question split of generated data. `text` is the dataset-format file
// body the records were parsed from; `gold_paths` gives, per record, the
// relation sequence the generator walked to produce the answer set.
struct SyntheticSplit {
    std::vector<QuestionRecord> records;
    std::vector<std::vector<RelationId>> gold_paths;
    std::string text;
};

struct SyntheticHopData {
    SyntheticSplit train, valid, test;
};

struct SyntheticData {
    std::string kb_text;
    KnowledgeGraph kg;
    std::map<int, SyntheticHopData> hops;  // hop class -> splits
};

// Random multi-relational graph plus template questions whose answers come
// from exhaustive traversal of the generated edges. Every entity gets one or
// two outgoing edges per relation, so any requested hop depth is realizable.
// Splits are 8/1/1 after a seeded shuffle; the same seed reproduces the whole
// dataset byte for byte.
SyntheticData generate_synthetic(std::size_t entities, std::size_t relations,
                                 const std::set<int>& hops, std::uint64_t seed);

// Writes kb.txt plus qa_<h>hop_{train,valid,test}.txt under dir.
void write_synthetic(const SyntheticData& data, const std::string& dir);

struct QaSplitFiles {
    std::string train, valid, test;
};

struct ExperimentConfig {
    std::string kb_path;
    std::map<int, QaSplitFiles> qa;  // hop class -> split files
    bool kg_half = false;
    KgeFamily family = KgeFamily::Multiplicative;
    KgeTrainConfig kge;      // its seed field is replaced by one derived from `seed`
    QaTrainConfig qa_train;  // likewise
    AnswerConfig answer;     // its mode field is ignored: all three modes are evaluated
    std::string output_dir;  // empty -> nothing written to disk
    std::uint64_t seed = 42;
    int threads = 0;
};

struct PredictionRecord {
    std::size_t question_index = 0;
    EntityId predicted = 0;
    std::vector<EntityId> gold;
    double triple_score = 0.0;
    double path_term = 0.0;
    double total = 0.0;
    std::string rendered_path;  // empty when the top candidate had no path
};

struct ModeEval {
    ScoreMode mode = ScoreMode::Full;
    double hits = 0.0;  // percentage
    std::size_t questions = 0;
    std::size_t with_path = 0;  // top candidates carrying an explanation
    std::vector<PredictionRecord> log;
};

struct HopEval {
    int hop_class = 0;
    std::vector<ModeEval> modes;  // Full, NoPath, SigmoidPath in that order
};

struct EvalReport {
    std::vector<HopEval> hops;

    // config echo + dataset shape
    std::string kb_path;
    bool kg_half = false;
    std::string family;
    std::size_t kg_entities = 0, kg_relations = 0, kg_triples = 0;
    std::map<int, std::array<std::size_t, 3>> split_sizes;  // hop -> train/valid/test

    // seed manifest
    std::uint64_t root_seed = 0, half_seed = 0, kge_seed = 0, qa_seed = 0;

    // training diagnostics
    double kge_heldout_gap = 0.0;
    double qa_best_valid_hits = 0.0;
    int qa_best_epoch = -1;

    double wall_seconds = 0.0;
};

// JSON body of the machine-readable report.
std::string report_json(const EvalReport& report);
// Aligned text table, one block per condition: rows are modes, columns hops.
std::string report_table(const EvalReport& report);
// Tab-separated per-question prediction log across all hops and modes.
std::string prediction_log(const EvalReport& report, const KnowledgeGraph& kg);

// Full pipeline: load -> (halve) -> train embeddings -> train encoder ->
// evaluate every mode per hop class. Writes report.json, report.txt and
// predictions.tsv under output_dir when set. Any stage failure is rethrown as
// PipelineError naming the stage.
EvalReport run_experiment(const ExperimentConfig& config);

}  // namespace pathqa
