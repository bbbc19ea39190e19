// Python bindings for the reference-graph relation-extraction library.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mrefg/config.hpp"
#include "mrefg/corpus.hpp"
#include "mrefg/encoder.hpp"
#include "mrefg/evaluation.hpp"
#include "mrefg/features.hpp"
#include "mrefg/mgat.hpp"
#include "mrefg/model_io.hpp"
#include "mrefg/refgraph.hpp"
#include "mrefg/synthgen.hpp"
#include "mrefg/trainer.hpp"
#include "mrefg/util.hpp"

namespace py = pybind11;
using namespace mrefg;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semi-supervised relation extraction over multiple reference graphs";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  // ----------------------------------------------------------------- corpus
  py::class_<Span>(m, "Span")
      .def(py::init<>())
      .def(py::init([](int start, int end) { return Span{start, end}; }), py::arg("start"),
           py::arg("end"))
      .def_readwrite("start", &Span::start)
      .def_readwrite("end", &Span::end)
      .def("__len__", &Span::length)
      .def("__eq__", [](const Span& a, const Span& b) { return a == b; })
      .def("__repr__", [](const Span& s) {
        return "Span(" + std::to_string(s.start) + ", " + std::to_string(s.end) + ")";
      });

  py::class_<Sample>(m, "Sample")
      .def(py::init<>())
      .def_readwrite("id", &Sample::id)
      .def_readwrite("tokens", &Sample::tokens)
      .def_readwrite("pos", &Sample::pos)
      .def_readwrite("ner", &Sample::ner)
      .def_readwrite("subj", &Sample::subj)
      .def_readwrite("obj", &Sample::obj)
      .def_readwrite("relation", &Sample::relation)
      .def("__len__", &Sample::size)
      .def("__eq__", [](const Sample& a, const Sample& b) { return a == b; })
      .def("__repr__",
           [](const Sample& s) { return "Sample(id='" + s.id + "', tokens=" +
                                        std::to_string(s.tokens.size()) + ")"; });

  py::class_<RelationVocab>(m, "RelationVocab")
      .def(py::init<const std::vector<std::string>&>(), py::arg("observed"))
      .def(py::init<>())
      .def("index", &RelationVocab::index, py::arg("label"))
      .def("label", &RelationVocab::label, py::arg("index"))
      .def("labels", &RelationVocab::labels)
      .def("__len__", &RelationVocab::size)
      .def_property_readonly_static("NO_RELATION",
                                    [](py::object) { return RelationVocab::kNoRelation; });

  py::class_<CorpusSplit>(m, "CorpusSplit")
      .def_readonly("labeled", &CorpusSplit::labeled)
      .def_readonly("unlabeled", &CorpusSplit::unlabeled)
      .def_readonly("dev", &CorpusSplit::dev)
      .def_readonly("test", &CorpusSplit::test)
      .def("hidden_gold_for_diagnostics", &CorpusSplit::hidden_gold_for_diagnostics);

  m.def("validate_sample", &validate_sample, py::arg("sample"));
  m.def("load_corpus", &load_corpus, py::arg("path"));
  m.def("save_corpus", &save_corpus, py::arg("samples"), py::arg("path"));
  m.def("split_corpus", &split_corpus, py::arg("samples"), py::arg("labeled_frac"),
        py::arg("unlabeled_frac"), py::arg("seed"));
  m.def("build_relation_vocab", &build_relation_vocab, py::arg("samples"));
  m.def("write_split_manifest", &write_split_manifest, py::arg("split"), py::arg("path"));

  // --------------------------------------------------------------- features
  py::class_<EntitySignature>(m, "EntitySignature")
      .def_readonly("adjacent", &EntitySignature::adjacent)
      .def_readonly("ner_types", &EntitySignature::ner_types)
      .def_readonly("entity_tokens", &EntitySignature::entity_tokens);

  py::class_<VerbSignature>(m, "VerbSignature")
      .def_readonly("phrase", &VerbSignature::phrase);

  py::class_<Lemmatizer>(m, "Lemmatizer")
      .def(py::init<>())
      .def_static("from_file", &Lemmatizer::from_file, py::arg("path"))
      .def("lemma", &Lemmatizer::lemma, py::arg("token"));

  m.def("entity_signature", &entity_signature, py::arg("sample"),
        py::arg("adjacency_window") = 0);
  m.def(
      "verb_signature",
      [](const Sample& s) { return verb_signature(s); }, py::arg("sample"));

  // ----------------------------------------------------------------- graphs
  py::enum_<GraphKind>(m, "GraphKind")
      .value("entity", GraphKind::entity)
      .value("verb", GraphKind::verb)
      .value("semantics", GraphKind::semantics);

  py::class_<GraphConfig>(m, "GraphConfig")
      .def(py::init<>())
      .def_readwrite("delta", &GraphConfig::delta)
      .def_readwrite("max_degree", &GraphConfig::max_degree)
      .def_readwrite("adjacency_window", &GraphConfig::adjacency_window);

  py::class_<ReferenceGraph>(m, "ReferenceGraph")
      .def(py::init<GraphKind>(), py::arg("kind"))
      .def_property_readonly("kind", &ReferenceGraph::kind)
      .def("edge_count", &ReferenceGraph::edge_count)
      .def("has_edge", &ReferenceGraph::has_edge, py::arg("u"), py::arg("v"))
      .def("edge_score", &ReferenceGraph::edge_score, py::arg("u"), py::arg("v"))
      .def("add_edge", &ReferenceGraph::add_edge, py::arg("u"), py::arg("v"),
           py::arg("score") = 1.0)
      .def("neighbors", &ReferenceGraph::neighbors, py::arg("id"))
      .def("degree", &ReferenceGraph::degree, py::arg("id"))
      .def("edges", [](const ReferenceGraph& g) {
        std::vector<std::tuple<std::string, std::string, double>> out;
        for (const auto& e : g.edges()) out.emplace_back(e.a, e.b, e.score);
        return out;
      });

  py::class_<GraphSet>(m, "GraphSet")
      .def_readonly("entity", &GraphSet::entity)
      .def_readonly("verb", &GraphSet::verb)
      .def_readonly("semantics", &GraphSet::semantics);

  m.def(
      "build_entity_graph",
      [](const std::vector<std::string>& labeled, const std::vector<std::string>& pool,
         const std::vector<Sample>& samples, int adjacency_window) {
        EntitySignatureMap sigs;
        for (const Sample& s : samples) sigs[s.id] = entity_signature(s, adjacency_window);
        return build_entity_graph(labeled, pool, sigs);
      },
      py::arg("labeled_ids"), py::arg("pool_ids"), py::arg("samples"),
      py::arg("adjacency_window") = 0);
  m.def(
      "build_verb_graph",
      [](const std::vector<std::string>& labeled, const std::vector<std::string>& pool,
         const std::vector<Sample>& samples) {
        VerbSignatureMap sigs;
        for (const Sample& s : samples) sigs[s.id] = verb_signature(s);
        return build_verb_graph(labeled, pool, sigs);
      },
      py::arg("labeled_ids"), py::arg("pool_ids"), py::arg("samples"));
  m.def("build_semantic_graph", &build_semantic_graph, py::arg("labeled_embeddings"),
        py::arg("pool_embeddings"), py::arg("config"));
  m.def("cosine_similarity", &cosine_similarity, py::arg("a"), py::arg("b"));

  // ----------------------------------------------------------------- synth
  py::class_<SynthSpec>(m, "SynthSpec")
      .def_readwrite("samples_per_relation", &SynthSpec::samples_per_relation)
      .def_readwrite("adjacency_prob", &SynthSpec::adjacency_prob)
      .def_readwrite("noise_rate", &SynthSpec::noise_rate)
      .def_readwrite("seed", &SynthSpec::seed)
      .def_static("basic", &SynthSpec::basic, py::arg("num_relations"),
                  py::arg("samples_per_relation"), py::arg("adjacency_prob"),
                  py::arg("noise_rate"), py::arg("seed"), py::arg("verbs_per_relation") = 8,
                  py::arg("entities_per_relation") = 24);

  py::class_<GeneratedCorpus>(m, "GeneratedCorpus")
      .def_readonly("samples", &GeneratedCorpus::samples)
      .def_readonly("entity_edges", &GeneratedCorpus::entity_edges)
      .def_readonly("verb_edges", &GeneratedCorpus::verb_edges);

  m.def("generate", &generate, py::arg("spec"));
  m.def("write_generated", &write_generated, py::arg("corpus"), py::arg("corpus_path"),
        py::arg("edges_path"));

  // -------------------------------------------------------------- training
  py::class_<EncoderConfig>(m, "EncoderConfig")
      .def(py::init<>())
      .def_readwrite("token_dim", &EncoderConfig::token_dim)
      .def_readwrite("tag_dim", &EncoderConfig::tag_dim)
      .def_readwrite("position_dim", &EncoderConfig::position_dim)
      .def_readwrite("hidden", &EncoderConfig::hidden)
      .def_readwrite("max_offset", &EncoderConfig::max_offset)
      .def_readwrite("dropout", &EncoderConfig::dropout)
      .def_readwrite("finetune_tokens", &EncoderConfig::finetune_tokens);

  py::class_<MgatConfig>(m, "MgatConfig")
      .def(py::init<>())
      .def_readwrite("heads", &MgatConfig::heads)
      .def_readwrite("dim", &MgatConfig::dim)
      .def_readwrite("fusion_dim", &MgatConfig::fusion_dim)
      .def_readwrite("leaky_slope", &MgatConfig::leaky_slope);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("labeled_frac", &TrainConfig::labeled_frac)
      .def_readwrite("unlabeled_frac", &TrainConfig::unlabeled_frac)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("embeddings_path", &TrainConfig::embeddings_path)
      .def_readwrite("graph", &TrainConfig::graph)
      .def_readwrite("graphs", &TrainConfig::graphs)
      .def_readwrite("encoder", &TrainConfig::encoder)
      .def_readwrite("mgat", &TrainConfig::mgat)
      .def_readwrite("mgat_backprop_encoder", &TrainConfig::mgat_backprop_encoder)
      .def_readwrite("optimizer", &TrainConfig::optimizer)
      .def_readwrite("lr_p", &TrainConfig::lr_p)
      .def_readwrite("lr_m", &TrainConfig::lr_m)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("init_epochs", &TrainConfig::init_epochs)
      .def_readwrite("epochs_p", &TrainConfig::epochs_p)
      .def_readwrite("epochs_m", &TrainConfig::epochs_m)
      .def_readwrite("max_iters", &TrainConfig::max_iters)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("select_frac", &TrainConfig::select_frac)
      .def_readwrite("select_frac_of_original", &TrainConfig::select_frac_of_original);

  m.def("validate_train_config", &validate_train_config, py::arg("config"));
  m.def(
      "train_config_from_entries",
      [](const std::map<std::string, std::string>& entries) {
        return train_config_from(Config{std::map<std::string, std::string>(entries)});
      },
      py::arg("entries"));
  m.def(
      "config_entries", [](const TrainConfig& cfg) { return to_config(cfg).entries(); },
      py::arg("config"));

  py::class_<Metrics>(m, "Metrics")
      .def_readonly("precision", &Metrics::precision)
      .def_readonly("recall", &Metrics::recall)
      .def_readonly("f1", &Metrics::f1)
      .def_readonly("tp", &Metrics::tp)
      .def_readonly("fp", &Metrics::fp)
      .def_readonly("fn", &Metrics::fn)
      .def_readonly("per_class", &Metrics::per_class)
      .def("__repr__", [](const Metrics& m_) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "Metrics(p=%.4f, r=%.4f, f1=%.4f)", m_.precision,
                      m_.recall, m_.f1);
        return std::string(buf);
      });

  py::class_<IterationRecord>(m, "IterationRecord")
      .def_readonly("iteration", &IterationRecord::iteration)
      .def_readonly("dev", &IterationRecord::dev)
      .def_readonly("test", &IterationRecord::test)
      .def_readonly("train_loss", &IterationRecord::train_loss)
      .def_readonly("labeled_size", &IterationRecord::labeled_size)
      .def_readonly("pool_size", &IterationRecord::pool_size)
      .def_readonly("agreeing", &IterationRecord::agreeing)
      .def_readonly("augmented", &IterationRecord::augmented)
      .def_readonly("augmentation_precision", &IterationRecord::augmentation_precision)
      .def_readonly("selected", &IterationRecord::selected)
      .def_readonly("beta", &IterationRecord::beta)
      .def_readonly("edge_counts", &IterationRecord::edge_counts);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("history", &RunResult::history)
      .def_readonly("best_iteration", &RunResult::best_iteration)
      .def_readonly("best_dev", &RunResult::best_dev)
      .def_readonly("best_test", &RunResult::best_test);

  py::class_<PredictionPair>(m, "PredictionPair")
      .def(py::init([](std::string id, Eigen::VectorXd p, Eigen::VectorXd m_) {
             PredictionPair out;
             out.id = std::move(id);
             out.p = std::move(p);
             out.m = std::move(m_);
             return out;
           }),
           py::arg("id"), py::arg("p"), py::arg("m"))
      .def_readonly("id", &PredictionPair::id)
      .def_readonly("p", &PredictionPair::p)
      .def_readonly("m", &PredictionPair::m)
      .def("agree", &PredictionPair::agree)
      .def("score", &PredictionPair::score);

  m.def("select_augmentation", &select_augmentation, py::arg("pairs"), py::arg("fraction"),
        py::arg("vocab"), py::arg("pool_size"));

  py::class_<Encoder>(m, "Encoder")
      .def("predict_proba", &Encoder::predict_proba, py::arg("sample"))
      .def("predict", &Encoder::predict, py::arg("sample"))
      .def("sentence_embedding", &Encoder::sentence_embedding, py::arg("sample"))
      .def("embedding_dim", &Encoder::embedding_dim)
      .def("num_relations", &Encoder::num_relations);

  py::class_<SemiSupervisedRunner>(m, "SemiSupervisedRunner")
      .def(py::init<TrainConfig, std::vector<Sample>>(), py::arg("config"), py::arg("corpus"))
      .def("run", &SemiSupervisedRunner::run)
      .def_property_readonly("config", &SemiSupervisedRunner::config)
      .def_property_readonly("relations", &SemiSupervisedRunner::relations)
      .def_property_readonly("split", &SemiSupervisedRunner::split)
      .def_property_readonly("graphs", &SemiSupervisedRunner::graphs,
                             py::return_value_policy::reference_internal)
      .def_property_readonly("node_ids", &SemiSupervisedRunner::node_ids)
      .def_property_readonly("labeled_ids", &SemiSupervisedRunner::labeled_ids)
      .def_property_readonly("pool_ids", &SemiSupervisedRunner::pool_ids)
      .def("encoder", &SemiSupervisedRunner::encoder,
           py::return_value_policy::reference_internal);

  // ------------------------------------------------------------- evaluation
  m.def("score", &score, py::arg("predictions"), py::arg("gold"), py::arg("vocab"));
  m.def("write_run_log", &write_run_log, py::arg("history"), py::arg("path"));
  m.def("read_run_log", &read_run_log, py::arg("path"));
  m.def("emit_curves", &emit_curves, py::arg("history"), py::arg("out_dir"));

  // ------------------------------------------------------------ checkpoints
  py::class_<CheckpointData>(m, "CheckpointData")
      .def_readonly("config", &CheckpointData::config)
      .def_readonly("relations", &CheckpointData::relations);

  m.def("snapshot", &snapshot, py::arg("runner"));
  m.def("save_checkpoint", &save_checkpoint, py::arg("data"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def("restore_encoder", &restore_encoder, py::arg("data"));
  m.def("restore_relations", &restore_relations, py::arg("data"));
}
