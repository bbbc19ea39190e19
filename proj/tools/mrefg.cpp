#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrefg/config.hpp"
#include "mrefg/corpus.hpp"
#include "mrefg/evaluation.hpp"
#include "mrefg/features.hpp"
#include "mrefg/model_io.hpp"
#include "mrefg/refgraph.hpp"
#include "mrefg/synthgen.hpp"
#include "mrefg/trainer.hpp"

namespace fs = std::filesystem;
using namespace mrefg;

namespace {

std::string resolve_data_path(const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute() || fs::exists(p)) return path;
  const char* root = std::getenv("MREFG_DATA_DIR");
  if (root != nullptr && *root != '\0') {
    fs::path candidate = fs::path(root) / p;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

void print_metrics(const std::string& name, const Metrics& m) {
  std::printf("%s: precision %.4f recall %.4f f1 %.4f (tp %ld fp %ld fn %ld)\n", name.c_str(),
              m.precision, m.recall, m.f1, m.tp, m.fp, m.fn);
}

struct TrainCli {
  std::string corpus, config_path, out_dir = "runs/latest";
  std::map<std::string, std::string> overrides;
};

void add_override_flag(CLI::App* cmd, TrainCli& cli, const std::string& flag,
                       const std::string& key, const std::string& help) {
  auto setter = [&cli, key](const std::string& v) { cli.overrides[key] = v; };
  cmd->add_option_function<std::string>(flag, setter, help);
}

int run_train(const TrainCli& cli) {
  Config cfg = cli.config_path.empty() ? Config() : Config::load(resolve_data_path(cli.config_path));
  for (const auto& [k, v] : cli.overrides) cfg.set(k, v);

  std::string corpus_path = cli.corpus;
  if (corpus_path.empty()) corpus_path = cfg.get_string("corpus", "");
  if (corpus_path.empty()) throw ValidationError("no corpus given (use --corpus or config key)");
  corpus_path = resolve_data_path(corpus_path);

  TrainConfig tc = train_config_from(cfg);
  std::vector<Sample> corpus = load_corpus(corpus_path);
  std::printf("loaded %zu samples from %s\n", corpus.size(), corpus_path.c_str());

  SemiSupervisedRunner runner(std::move(tc), std::move(corpus));
  RunResult result = runner.run();

  fs::create_directories(cli.out_dir);
  write_run_log(result.history, (fs::path(cli.out_dir) / "run_log.jsonl").string());
  emit_curves(result.history, cli.out_dir);
  write_split_manifest(runner.split(), (fs::path(cli.out_dir) / "split.tsv").string());
  save_checkpoint(snapshot(runner), (fs::path(cli.out_dir) / "checkpoint.json").string());

  std::printf("iterations: %zu (best: %d)\n", result.history.size() - 1, result.best_iteration);
  print_metrics("best dev", result.best_dev);
  print_metrics("best test", result.best_test);
  std::printf("artifacts written to %s\n", cli.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-graph semi-supervised relation extraction"};
  app.require_subcommand(1);

  // build-graphs
  std::string bg_corpus, bg_out = "graphs", bg_checkpoint, bg_graphs = "entity,verb,semantics";
  GraphConfig bg_cfg;
  auto* bg = app.add_subcommand("build-graphs", "Construct reference graphs from a corpus");
  bg->add_option("--corpus", bg_corpus, "Corpus JSONL file")->required();
  bg->add_option("--delta", bg_cfg.delta, "Cosine threshold for semantic edges");
  bg->add_option("--max-degree", bg_cfg.max_degree, "Semantic-graph degree cap (<=0 disables)");
  bg->add_option("--adjacency-window", bg_cfg.adjacency_window,
                 "Max tokens between spans still counted as adjacent");
  bg->add_option("--graphs", bg_graphs, "Comma-separated subset of entity,verb,semantics");
  bg->add_option("--checkpoint", bg_checkpoint,
                 "Trained model used to embed sentences for the semantic graph");
  bg->add_option("--out", bg_out, "Output directory");

  // train
  TrainCli tr;
  auto* train = app.add_subcommand("train", "Run the semi-supervised training loop");
  train->add_option("--corpus", tr.corpus, "Corpus JSONL file");
  train->add_option("--config", tr.config_path, "Flat key=value config file");
  train->add_option("--out", tr.out_dir, "Output directory for run artifacts");
  add_override_flag(train, tr, "--graphs", "graphs", "Graphs to use (entity,verb,semantics)");
  add_override_flag(train, tr, "--labeled-frac", "labeled_frac", "Labeled fraction of the corpus");
  add_override_flag(train, tr, "--unlabeled-frac", "unlabeled_frac", "Unlabeled fraction");
  add_override_flag(train, tr, "--select-frac", "select_frac", "Fraction promoted per iteration");
  add_override_flag(train, tr, "--seed", "seed", "Random seed");
  add_override_flag(train, tr, "--delta", "delta", "Cosine threshold for semantic edges");
  add_override_flag(train, tr, "--max-iters", "max_iters", "Maximum loop iterations");
  add_override_flag(train, tr, "--patience", "patience", "Dev-F1 patience");
  add_override_flag(train, tr, "--hidden", "hidden", "Encoder hidden size per direction");
  add_override_flag(train, tr, "--embeddings", "embeddings", "Pretrained token vectors");

  // eval
  std::string ev_checkpoint, ev_test;
  auto* ev = app.add_subcommand("eval", "Score a checkpoint on a labeled test file");
  ev->add_option("--checkpoint", ev_checkpoint, "Checkpoint JSON")->required();
  ev->add_option("--test", ev_test, "Labeled test JSONL")->required();

  // trace-augmentation
  std::string ta_log, ta_out = "trace";
  auto* ta = app.add_subcommand("trace-augmentation",
                                "Re-render curves and selection tables from a run log");
  ta->add_option("--run-log", ta_log, "run_log.jsonl from a training run")->required();
  ta->add_option("--out", ta_out, "Output directory");

  // synth
  int sy_relations = 6, sy_per = 100, sy_verbs = 8, sy_entities = 24;
  double sy_adj = 0.3, sy_noise = 0.0;
  std::uint64_t sy_seed = 1;
  std::string sy_out = "synth.jsonl", sy_edges = "synth_edges.tsv";
  auto* sy = app.add_subcommand("synth", "Generate a synthetic relation corpus");
  sy->add_option("--relations", sy_relations, "Number of relation classes");
  sy->add_option("--samples-per-relation", sy_per, "Samples per relation");
  sy->add_option("--adjacency-prob", sy_adj, "Probability the entity spans touch");
  sy->add_option("--noise", sy_noise, "Fraction of samples with a verb from another relation");
  sy->add_option("--verbs-per-relation", sy_verbs, "Verb lexicon size");
  sy->add_option("--entities-per-relation", sy_entities, "Entity lexicon size");
  sy->add_option("--seed", sy_seed, "Random seed");
  sy->add_option("--out", sy_out, "Corpus JSONL output path");
  sy->add_option("--edges", sy_edges, "Declared edge-list output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bg->parsed()) {
      std::vector<Sample> corpus = load_corpus(resolve_data_path(bg_corpus));
      std::vector<std::string> labeled, pool;
      EntitySignatureMap ent;
      VerbSignatureMap verb;
      for (const Sample& s : corpus) {
        (s.relation.has_value() ? labeled : pool).push_back(s.id);
        ent[s.id] = entity_signature(s, bg_cfg.adjacency_window);
        verb[s.id] = verb_signature(s);
      }
      std::sort(labeled.begin(), labeled.end());
      std::sort(pool.begin(), pool.end());

      GraphSet graphs;
      std::vector<const ReferenceGraph*> to_export;
      for (GraphKind kind : parse_graph_list(bg_graphs)) {
        if (kind == GraphKind::entity) {
          graphs.entity = build_entity_graph(labeled, pool, ent);
          to_export.push_back(&graphs.entity);
          std::printf("entity: %zu edges\n", graphs.entity.edge_count());
        } else if (kind == GraphKind::verb) {
          graphs.verb = build_verb_graph(labeled, pool, verb);
          to_export.push_back(&graphs.verb);
          std::printf("verb: %zu edges\n", graphs.verb.edge_count());
        } else {
          if (bg_checkpoint.empty()) {
            throw ValidationError(
                "semantic graph needs --checkpoint to embed sentences; "
                "pass --graphs entity,verb to skip it");
          }
          CheckpointData data = load_checkpoint(resolve_data_path(bg_checkpoint));
          auto enc = restore_encoder(data);
          EmbeddingMap lab_emb, pool_emb;
          for (const Sample& s : corpus) {
            (s.relation.has_value() ? lab_emb : pool_emb)[s.id] = enc->sentence_embedding(s);
          }
          graphs.semantics = build_semantic_graph(lab_emb, pool_emb, bg_cfg);
          to_export.push_back(&graphs.semantics);
          std::printf("semantics: %zu edges\n", graphs.semantics.edge_count());
        }
      }
      fs::create_directories(bg_out);
      std::string edges_path = (fs::path(bg_out) / "edges.tsv").string();
      export_edges(to_export, edges_path);
      std::printf("edges written to %s\n", edges_path.c_str());
      return 0;
    }
    if (train->parsed()) return run_train(tr);
    if (ev->parsed()) {
      CheckpointData data = load_checkpoint(resolve_data_path(ev_checkpoint));
      auto enc = restore_encoder(data);
      RelationVocab vocab = restore_relations(data);
      std::vector<Sample> test = load_corpus(resolve_data_path(ev_test));
      std::map<std::string, std::string> pred, gold;
      for (const Sample& s : test) {
        if (!s.relation.has_value()) {
          throw ValidationError("test sample " + s.id + " has no gold relation");
        }
        pred[s.id] = vocab.label(enc->predict(s));
        gold[s.id] = *s.relation;
      }
      print_metrics("test", score(pred, gold, vocab));
      return 0;
    }
    if (ta->parsed()) {
      TrainHistory history = read_run_log(resolve_data_path(ta_log));
      emit_curves(history, ta_out);
      std::ofstream sel(fs::path(ta_out) / "selections.tsv");
      if (!sel) throw IoError("cannot write selections.tsv under " + ta_out);
      sel << "iteration\tid\tpseudo_label\n";
      for (const IterationRecord& r : history) {
        for (const auto& [id, label] : r.selected) {
          sel << r.iteration << "\t" << id << "\t" << label << "\n";
        }
      }
      std::printf("trace written to %s\n", ta_out.c_str());
      return 0;
    }
    if (sy->parsed()) {
      SynthSpec spec = SynthSpec::basic(sy_relations, sy_per, sy_adj, sy_noise, sy_seed,
                                        sy_verbs, sy_entities);
      GeneratedCorpus corpus = generate(spec);
      write_generated(corpus, sy_out, sy_edges);
      std::printf("wrote %zu samples to %s (%zu entity edges, %zu verb edges declared)\n",
                  corpus.samples.size(), sy_out.c_str(), corpus.entity_edges.size(),
                  corpus.verb_edges.size());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
