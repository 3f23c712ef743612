#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <sstream>

#include "pathqa/embedding.hpp"
#include "pathqa/encoder.hpp"
#include "pathqa/errors.hpp"
#include "pathqa/eval.hpp"
#include "pathqa/kg.hpp"
#include "pathqa/kge_train.hpp"
#include "pathqa/paths.hpp"
#include "pathqa/qa_data.hpp"
#include "pathqa/qa_train.hpp"
#include "pathqa/rng.hpp"
#include "pathqa/scorer.hpp"

namespace py = pybind11;
using namespace pathqa;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-relational KBQA core: graph loading, embedding training, "
              "path-aware answering";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<PipelineError>(m, "PipelineError", PyExc_RuntimeError);
    py::register_exception<TrainingDiverged>(m, "TrainingDiverged", PyExc_RuntimeError);

    // ------------------------------------------------------------- enums
    py::enum_<KgeFamily>(m, "KgeFamily")
        .value("ADDITIVE", KgeFamily::Additive)
        .value("MULTIPLICATIVE", KgeFamily::Multiplicative)
        .value("ROTATION", KgeFamily::HadamardRotation);

    py::enum_<SpaceKind>(m, "SpaceKind")
        .value("REAL", SpaceKind::Real)
        .value("COMPLEX", SpaceKind::Complex);

    py::enum_<ScoreMode>(m, "ScoreMode")
        .value("FULL", ScoreMode::Full)
        .value("NO_PATH", ScoreMode::NoPath)
        .value("SIGMOID_PATH", ScoreMode::SigmoidPath);

    py::enum_<PathPolicy>(m, "PathPolicy")
        .value("LEX_FIRST", PathPolicy::LexicographicFirst)
        .value("MAX_CORRELATION", PathPolicy::MaxCorrelation);

    // ------------------------------------------------------------- graph
    py::class_<Triple>(m, "Triple")
        .def(py::init([](EntityId h, RelationId r, EntityId t) {
                 return Triple{h, r, t};
             }),
             py::arg("head"), py::arg("relation"), py::arg("tail"))
        .def_readonly("head", &Triple::head)
        .def_readonly("relation", &Triple::relation)
        .def_readonly("tail", &Triple::tail)
        .def(py::self == py::self)
        .def("__repr__", [](const Triple& t) {
            std::ostringstream out;
            out << "Triple(" << t.head << ", " << t.relation << ", " << t.tail << ")";
            return out.str();
        });

    py::class_<KnowledgeGraph>(m, "KnowledgeGraph")
        .def_property_readonly("entity_count", &KnowledgeGraph::entity_count)
        .def_property_readonly("relation_count", &KnowledgeGraph::relation_count)
        .def_property_readonly("triple_count", &KnowledgeGraph::triple_count)
        .def_property_readonly("edge_count", &KnowledgeGraph::edge_count)
        .def("triples", &KnowledgeGraph::triples)
        .def("entity_name", &KnowledgeGraph::entity_name, py::arg("entity"))
        .def("relation_name", &KnowledgeGraph::relation_name, py::arg("relation"))
        .def("entity_names", &KnowledgeGraph::entity_names)
        .def("relation_names", &KnowledgeGraph::relation_names)
        .def("find_entity",
             [](const KnowledgeGraph& kg, const std::string& name) { return kg.find_entity(name); },
             py::arg("name"))
        .def("find_relation",
             [](const KnowledgeGraph& kg, const std::string& name) {
                 return kg.find_relation(name);
             },
             py::arg("name"))
        .def("neighbors",
             [](const KnowledgeGraph& kg, EntityId e) {
                 std::vector<std::pair<RelationId, EntityId>> out;
                 for (const auto& edge : kg.neighbors(e)) out.emplace_back(edge.relation, edge.entity);
                 return out;
             },
             py::arg("entity"))
        .def("subsample_half", &KnowledgeGraph::subsample_half, py::arg("seed"))
        .def("save_file", &KnowledgeGraph::save_file, py::arg("path"))
        .def_static("load_file", &KnowledgeGraph::load_file, py::arg("path"))
        .def("__repr__", [](const KnowledgeGraph& kg) {
            std::ostringstream out;
            out << "KnowledgeGraph(" << kg.entity_count() << " entities, " << kg.relation_count()
                << " relations, " << kg.triple_count() << " triples)";
            return out.str();
        });

    m.def("load_kb", &load_kb_file, py::arg("path"),
          "Parse head|relation|tail lines, augmenting every relation with its inverse");

    // ------------------------------------------------------------- embeddings
    py::class_<EmbeddingSpace>(m, "EmbeddingSpace")
        .def_readonly("kind", &EmbeddingSpace::kind)
        .def_readonly("dim", &EmbeddingSpace::dim)
        .def("real_width", &EmbeddingSpace::real_width);

    py::class_<EmbeddingModel>(m, "EmbeddingModel")
        .def_property_readonly("family", &EmbeddingModel::family)
        .def_property_readonly("space", &EmbeddingModel::space)
        .def_property_readonly("entity_count", &EmbeddingModel::entity_count)
        .def_property_readonly("relation_count", &EmbeddingModel::relation_count)
        .def_property_readonly("width", &EmbeddingModel::width)
        .def("entity",
             [](const EmbeddingModel& model, EntityId e) { return to_vec(model.entity(e)); },
             py::arg("entity"))
        .def("relation",
             [](const EmbeddingModel& model, RelationId r) { return to_vec(model.relation(r)); },
             py::arg("relation"))
        .def("save_checkpoint", &EmbeddingModel::save_checkpoint, py::arg("path"), py::arg("kg"))
        .def_static("load_checkpoint", &EmbeddingModel::load_checkpoint, py::arg("path"));

    py::class_<KgeTrainConfig>(m, "KgeTrainConfig")
        .def(py::init<>())
        .def_readwrite("dim", &KgeTrainConfig::dim)
        .def_readwrite("epochs", &KgeTrainConfig::epochs)
        .def_readwrite("batch_size", &KgeTrainConfig::batch_size)
        .def_readwrite("learning_rate", &KgeTrainConfig::learning_rate)
        .def_readwrite("negatives_per_positive", &KgeTrainConfig::negatives_per_positive)
        .def_readwrite("margin", &KgeTrainConfig::margin)
        .def_readwrite("multiplicative_space", &KgeTrainConfig::multiplicative_space)
        .def_readwrite("seed", &KgeTrainConfig::seed);

    py::class_<KgeTrainResult>(m, "KgeTrainResult")
        .def_readonly("model", &KgeTrainResult::model)
        .def_readonly("heldout_observed_mean", &KgeTrainResult::heldout_observed_mean)
        .def_readonly("heldout_corrupted_mean", &KgeTrainResult::heldout_corrupted_mean)
        .def_readonly("heldout_count", &KgeTrainResult::heldout_count)
        .def_readonly("last_epoch_loss", &KgeTrainResult::last_epoch_loss)
        .def("heldout_gap", &KgeTrainResult::heldout_gap);

    m.def("initial_kge_model", &initial_kge_model, py::arg("kg"), py::arg("family"),
          py::arg("config"));
    m.def("train_kge", &train_kge, py::arg("kg"), py::arg("family"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    m.def("triple_score",
          [](const EmbeddingModel& model, EntityId h, RelationId r, EntityId t) {
              return triple_score(model, h, r, t);
          },
          py::arg("model"), py::arg("head"), py::arg("relation"), py::arg("tail"));
    m.def("triple_score",
          [](const EmbeddingModel& model, EntityId h, const std::vector<double>& rel, EntityId t) {
              return triple_score(model, h, std::span<const double>(rel), t);
          },
          py::arg("model"), py::arg("head"), py::arg("relation_vector"), py::arg("tail"),
          "The question-vector form: any raw vector stands in for the relation");

    py::class_<LinkPredictionMetrics>(m, "LinkPredictionMetrics")
        .def_readonly("hits_at_1", &LinkPredictionMetrics::hits_at_1)
        .def_readonly("hits_at_10", &LinkPredictionMetrics::hits_at_10)
        .def_readonly("mrr", &LinkPredictionMetrics::mrr)
        .def_readonly("test_count", &LinkPredictionMetrics::test_count);

    m.def("link_prediction_eval",
          [](const EmbeddingModel& model, const std::vector<Triple>& test,
             const std::vector<Triple>& all, int threads) {
              py::gil_scoped_release release;
              return link_prediction_eval(model, test, all, threads);
          },
          py::arg("model"), py::arg("test"), py::arg("all"), py::arg("threads") = 0);

    // ------------------------------------------------------------- paths
    py::class_<RelationPath>(m, "RelationPath")
        .def(py::init([](std::vector<RelationId> relations, EntityId source, EntityId target) {
                 RelationPath p;
                 p.relations = std::move(relations);
                 p.source = source;
                 p.target = target;
                 return p;
             }),
             py::arg("relations"), py::arg("source"), py::arg("target"))
        .def_readwrite("relations", &RelationPath::relations)
        .def_readwrite("source", &RelationPath::source)
        .def_readwrite("target", &RelationPath::target)
        .def(py::self == py::self)
        .def("__repr__", [](const RelationPath& p) {
            std::ostringstream out;
            out << "RelationPath([";
            for (std::size_t i = 0; i < p.relations.size(); ++i)
                out << (i ? ", " : "") << p.relations[i];
            out << "], " << p.source << " -> " << p.target << ")";
            return out.str();
        });

    m.def("shortest_relation_paths", &shortest_relation_paths, py::arg("kg"), py::arg("source"),
          py::arg("target"), py::arg("max_hops"), py::arg("cap"));
    m.def("path_embedding", &path_embedding, py::arg("model"), py::arg("path"));
    m.def("realize_path", &realize_path, py::arg("kg"), py::arg("path"));
    m.def("render_relation_chain", &render_relation_chain, py::arg("kg"), py::arg("relations"));
    m.def("render_explanation", &render_explanation, py::arg("kg"), py::arg("path"));
    m.def("inverse", &inverse, py::arg("relation"), "The paired inverse relation id");

    // ------------------------------------------------------------- questions
    py::class_<QuestionRecord>(m, "QuestionRecord")
        .def(py::init<>())
        .def_readwrite("raw", &QuestionRecord::raw)
        .def_readwrite("tokens", &QuestionRecord::tokens)
        .def_readwrite("topic", &QuestionRecord::topic)
        .def_readwrite("answers", &QuestionRecord::answers)
        .def("__repr__", [](const QuestionRecord& r) { return "QuestionRecord(" + r.raw + ")"; });

    m.def("tokenize", &tokenize, py::arg("text"));
    m.def("parse_question",
          [](const std::string& text, const KnowledgeGraph& kg) {
              return parse_question(text, kg);
          },
          py::arg("text"), py::arg("kg"));
    m.def("parse_qa_file",
          [](const std::string& path, const KnowledgeGraph& kg, bool skip_unresolvable) {
              QaParseOptions options;
              options.skip_unresolvable = skip_unresolvable;
              options.log = &std::cerr;
              return parse_qa_file(path, kg, options);
          },
          py::arg("path"), py::arg("kg"), py::arg("skip_unresolvable") = false);

    py::class_<EncoderParams>(m, "EncoderParams")
        .def_readonly("vocab", &EncoderParams::vocab)
        .def_readonly("token_dim", &EncoderParams::token_dim)
        .def_readonly("hidden_dim", &EncoderParams::hidden_dim)
        .def_readonly("output_width", &EncoderParams::output_width)
        .def_readonly("unit_modulus_output", &EncoderParams::unit_modulus_output)
        .def("save_file", &EncoderParams::save_file, py::arg("path"))
        .def_static("load_file", &EncoderParams::load_file, py::arg("path"));

    py::class_<QaTrainConfig>(m, "QaTrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &QaTrainConfig::epochs)
        .def_readwrite("batch_size", &QaTrainConfig::batch_size)
        .def_readwrite("learning_rate", &QaTrainConfig::learning_rate)
        .def_readwrite("label_smoothing", &QaTrainConfig::label_smoothing)
        .def_readwrite("token_dim", &QaTrainConfig::token_dim)
        .def_readwrite("hidden_dim", &QaTrainConfig::hidden_dim)
        .def_readwrite("seed", &QaTrainConfig::seed);

    py::class_<QaTrainResult>(m, "QaTrainResult")
        .def_readonly("encoder", &QaTrainResult::encoder)
        .def_readonly("best_valid_hits", &QaTrainResult::best_valid_hits)
        .def_readonly("best_epoch", &QaTrainResult::best_epoch)
        .def_readonly("last_epoch_loss", &QaTrainResult::last_epoch_loss);

    m.def("initial_encoder",
          [](const EmbeddingModel& model, const std::vector<QuestionRecord>& train,
             const QaTrainConfig& config) { return initial_encoder(model, train, config); },
          py::arg("model"), py::arg("train"), py::arg("config"));
    m.def("train_qa",
          [](const KnowledgeGraph& kg, const EmbeddingModel& model,
             const std::vector<QuestionRecord>& train, const std::vector<QuestionRecord>& valid,
             const QaTrainConfig& config, int threads) {
              py::gil_scoped_release release;
              return train_qa(kg, model, train, valid, config, threads);
          },
          py::arg("kg"), py::arg("model"), py::arg("train"), py::arg("valid"), py::arg("config"),
          py::arg("threads") = 0);
    m.def("encode_question", &encode_question, py::arg("encoder"), py::arg("tokens"));
    m.def("no_path_prediction",
          [](const EmbeddingModel& model, EntityId topic, const std::vector<double>& q) {
              return no_path_prediction(model, topic, q);
          },
          py::arg("model"), py::arg("topic"), py::arg("q"));

    // ------------------------------------------------------------- scoring
    py::class_<AnswerConfig>(m, "AnswerConfig")
        .def(py::init<>())
        .def_readwrite("alpha", &AnswerConfig::alpha)
        .def_readwrite("max_hops", &AnswerConfig::max_hops)
        .def_readwrite("path_cap", &AnswerConfig::path_cap)
        .def_readwrite("path_policy", &AnswerConfig::path_policy)
        .def_readwrite("mode", &AnswerConfig::mode);

    py::class_<ScoredCandidate>(m, "ScoredCandidate")
        .def_readonly("entity", &ScoredCandidate::entity)
        .def_readonly("triple_score", &ScoredCandidate::triple_score)
        .def_readonly("path_term", &ScoredCandidate::path_term)
        .def_readonly("total", &ScoredCandidate::total)
        .def_readonly("explanation", &ScoredCandidate::explanation)
        .def("__repr__", [](const ScoredCandidate& c) {
            std::ostringstream out;
            out << "ScoredCandidate(entity=" << c.entity << ", total=" << c.total << ")";
            return out.str();
        });

    m.def("ambipolar_term",
          [](const std::vector<double>& q, const std::vector<double>& p, ScoreMode mode) {
              return ambipolar_term(q, p, mode);
          },
          py::arg("q"), py::arg("p"), py::arg("mode"));
    m.def("path_term_bound", &path_term_bound, py::arg("mode"));
    m.def("rank_candidates",
          [](const KnowledgeGraph& kg, const EmbeddingModel& model, const std::vector<double>& q,
             EntityId topic, const AnswerConfig& config, int threads) {
              py::gil_scoped_release release;
              return rank_candidates(kg, model, q, topic, config, threads);
          },
          py::arg("kg"), py::arg("model"), py::arg("q"), py::arg("topic"), py::arg("config"),
          py::arg("threads") = 0);
    m.def("answer_question", &answer_question, py::arg("kg"), py::arg("model"), py::arg("encoder"),
          py::arg("question"), py::arg("config"), py::arg("threads") = 0,
          py::call_guard<py::gil_scoped_release>());

    // ------------------------------------------------------------- evaluation
    m.def("hits_at_1", &hits_at_1, py::arg("predictions"), py::arg("gold"));

    py::class_<SyntheticSplit>(m, "SyntheticSplit")
        .def_readonly("records", &SyntheticSplit::records)
        .def_readonly("gold_paths", &SyntheticSplit::gold_paths)
        .def_readonly("text", &SyntheticSplit::text);

    py::class_<SyntheticHopData>(m, "SyntheticHopData")
        .def_readonly("train", &SyntheticHopData::train)
        .def_readonly("valid", &SyntheticHopData::valid)
        .def_readonly("test", &SyntheticHopData::test);

    py::class_<SyntheticData>(m, "SyntheticData")
        .def_readonly("kb_text", &SyntheticData::kb_text)
        .def_readonly("kg", &SyntheticData::kg)
        .def_readonly("hops", &SyntheticData::hops);

    m.def("generate_synthetic", &generate_synthetic, py::arg("entities"), py::arg("relations"),
          py::arg("hops"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
    m.def("write_synthetic", &write_synthetic, py::arg("data"), py::arg("dir"));

    py::class_<QaSplitFiles>(m, "QaSplitFiles")
        .def(py::init([](std::string train, std::string valid, std::string test) {
                 return QaSplitFiles{std::move(train), std::move(valid), std::move(test)};
             }),
             py::arg("train"), py::arg("valid"), py::arg("test"))
        .def_readwrite("train", &QaSplitFiles::train)
        .def_readwrite("valid", &QaSplitFiles::valid)
        .def_readwrite("test", &QaSplitFiles::test);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("kb_path", &ExperimentConfig::kb_path)
        .def_readwrite("qa", &ExperimentConfig::qa)
        .def_readwrite("kg_half", &ExperimentConfig::kg_half)
        .def_readwrite("family", &ExperimentConfig::family)
        .def_readwrite("kge", &ExperimentConfig::kge)
        .def_readwrite("qa_train", &ExperimentConfig::qa_train)
        .def_readwrite("answer", &ExperimentConfig::answer)
        .def_readwrite("output_dir", &ExperimentConfig::output_dir)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("threads", &ExperimentConfig::threads);

    py::class_<PredictionRecord>(m, "PredictionRecord")
        .def_readonly("question_index", &PredictionRecord::question_index)
        .def_readonly("predicted", &PredictionRecord::predicted)
        .def_readonly("gold", &PredictionRecord::gold)
        .def_readonly("triple_score", &PredictionRecord::triple_score)
        .def_readonly("path_term", &PredictionRecord::path_term)
        .def_readonly("total", &PredictionRecord::total)
        .def_readonly("rendered_path", &PredictionRecord::rendered_path);

    py::class_<ModeEval>(m, "ModeEval")
        .def_readonly("mode", &ModeEval::mode)
        .def_readonly("hits", &ModeEval::hits)
        .def_readonly("questions", &ModeEval::questions)
        .def_readonly("with_path", &ModeEval::with_path)
        .def_readonly("log", &ModeEval::log);

    py::class_<HopEval>(m, "HopEval")
        .def_readonly("hop_class", &HopEval::hop_class)
        .def_readonly("modes", &HopEval::modes);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("hops", &EvalReport::hops)
        .def_readonly("kb_path", &EvalReport::kb_path)
        .def_readonly("kg_half", &EvalReport::kg_half)
        .def_readonly("family", &EvalReport::family)
        .def_readonly("kg_entities", &EvalReport::kg_entities)
        .def_readonly("kg_relations", &EvalReport::kg_relations)
        .def_readonly("kg_triples", &EvalReport::kg_triples)
        .def_readonly("split_sizes", &EvalReport::split_sizes)
        .def_readonly("root_seed", &EvalReport::root_seed)
        .def_readonly("half_seed", &EvalReport::half_seed)
        .def_readonly("kge_seed", &EvalReport::kge_seed)
        .def_readonly("qa_seed", &EvalReport::qa_seed)
        .def_readonly("kge_heldout_gap", &EvalReport::kge_heldout_gap)
        .def_readonly("qa_best_valid_hits", &EvalReport::qa_best_valid_hits)
        .def_readonly("qa_best_epoch", &EvalReport::qa_best_epoch)
        .def_readonly("wall_seconds", &EvalReport::wall_seconds);

    m.def("run_experiment", &run_experiment, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("report_json", &report_json, py::arg("report"));
    m.def("report_table", &report_table, py::arg("report"));
    m.def("prediction_log", &prediction_log, py::arg("report"), py::arg("kg"));

    m.def("derive_seed",
          [](std::uint64_t root, const std::string& label) { return derive_seed(root, label); },
          py::arg("root"), py::arg("label"),
          "Stable child seed for a labelled pipeline stage");
}
