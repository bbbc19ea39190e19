#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mrefg/corpus.hpp"
#include "mrefg/encoder.hpp"
#include "mrefg/evaluation.hpp"
#include "mrefg/mgat.hpp"
#include "mrefg/optim.hpp"
#include "mrefg/refgraph.hpp"
#include "mrefg/util.hpp"

namespace mrefg {

// Both modules' class distributions for one pool sample.
struct PredictionPair {
  std::string id;
  Eigen::VectorXd p;  // sequence-encoder distribution
  Eigen::VectorXd m;  // graph-module distribution

  bool agree() const {
    int ap = 0, am = 0;
    p.maxCoeff(&ap);
    m.maxCoeff(&am);
    return ap == am;
  }
  double score() const { return std::sqrt(p.maxCoeff() * m.maxCoeff()); }
};

// Picks pool samples where both modules agree on the argmax, ranked by the
// geometric mean of the two confidences (ties broken by ascending id), and
// returns the top ceil(fraction * pool_size) as (id, pseudo label).
std::vector<std::pair<std::string, std::string>> select_augmentation(
    const std::vector<PredictionPair>& pairs, double fraction, const RelationVocab& vocab,
    size_t pool_size);

struct TrainConfig {
  double labeled_frac = 0.1;
  double unlabeled_frac = 0.5;
  std::uint64_t seed = 1;
  std::string embeddings_path;  // optional pretrained token vectors

  GraphConfig graph;
  std::vector<GraphKind> graphs = {GraphKind::entity, GraphKind::verb, GraphKind::semantics};

  EncoderConfig encoder;
  MgatConfig mgat;
  bool mgat_backprop_encoder = false;  // when true, L_M also updates the encoder

  std::string optimizer = "adam";
  double lr_p = 1e-3;
  double lr_m = 5e-3;
  int batch_size = 32;
  int init_epochs = 30;  // supervised warm-up before the first iteration
  int epochs_p = 10;     // encoder epochs per iteration
  int epochs_m = 10;     // graph-module steps per iteration

  int max_iters = 10;
  int patience = 3;          // iterations without dev-F1 improvement
  double select_frac = 0.1;  // fraction of the pool promoted per iteration
  bool select_frac_of_original = false;  // fraction of the initial pool instead
};

void validate_train_config(const TrainConfig& cfg);

struct RunResult {
  TrainHistory history;
  int best_iteration = 0;
  Metrics best_dev;
  Metrics best_test;
};

// Alternates supervised encoder training with graph-attention training, then
// promotes confidently agreed-on pool samples into the labeled set and updates
// the reference graphs, until the pool is exhausted, max_iters is reached, or
// dev F1 stops improving. With max_iters = 0 (or an empty pool) this reduces
// to plain supervised training of the encoder.
class SemiSupervisedRunner {
 public:
  SemiSupervisedRunner(TrainConfig cfg, std::vector<Sample> corpus);

  RunResult run();

  const TrainConfig& config() const { return cfg_; }
  Encoder& encoder() { return *encoder_; }
  Mgat& mgat() { return *mgat_; }
  const RelationVocab& relations() const { return relations_; }
  const CorpusSplit& split() const { return split_; }
  const GraphSet& graphs() const { return graphs_; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<std::string>& labeled_ids() const { return labeled_ids_; }
  const std::vector<std::string>& pool_ids() const { return pool_ids_; }
  const std::map<std::string, int>& labels() const { return labels_; }

 private:
  void build_models();
  void refresh_embeddings();
  void rebuild_graphs();
  double encoder_epoch();
  std::pair<double, std::vector<double>> mgat_step();
  std::vector<const ReferenceGraph*> active_graphs() const;
  std::vector<PredictionPair> predict_pool(std::vector<double>* beta_out);
  Metrics evaluate(const std::vector<Sample>& samples);
  void promote(const std::vector<std::pair<std::string, std::string>>& selected);
  std::map<std::string, long> edge_count_map() const;
  std::map<std::string, double> beta_map(const std::vector<double>& beta) const;

  TrainConfig cfg_;
  Rng rng_;
  CorpusSplit split_;
  RelationVocab relations_;

  std::map<std::string, Sample> node_samples_;  // labeled + pool sentences
  std::vector<std::string> node_ids_;           // sorted, fixed for the run
  std::vector<std::string> labeled_ids_;
  std::vector<std::string> pool_ids_;
  std::map<std::string, int> labels_;  // current (gold or pseudo) label per labeled id

  EntitySignatureMap ent_sigs_;
  VerbSignatureMap verb_sigs_;
  EmbeddingMap embeddings_;
  GraphSet graphs_;

  std::unique_ptr<EmbeddingTable> pretrained_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<Mgat> mgat_;
  std::unique_ptr<Optimizer> opt_p_;
  std::unique_ptr<Optimizer> opt_m_;
};

}  // namespace mrefg
