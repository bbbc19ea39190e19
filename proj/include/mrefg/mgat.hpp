#pragma once

#include <map>
#include <string>
#include <vector>

#include "mrefg/autodiff.hpp"
#include "mrefg/optim.hpp"
#include "mrefg/refgraph.hpp"
#include "mrefg/util.hpp"

namespace mrefg {

struct MgatConfig {
  int heads = 4;
  int dim = 64;         // per-graph node representation (split across heads)
  int fusion_dim = 64;  // projection used by the graph-level attention
  double leaky_slope = 0.2;
};

// Per-node attention coefficients for one graph, for inspection in tests and
// traces: alpha[i][k] holds, for node i and head k, (neighbor index, weight)
// pairs over the closed neighborhood of i.
struct AttentionDiag {
  std::vector<std::vector<std::vector<std::pair<int, double>>>> alpha;
};

// Multi-graph attention: per-graph multi-head node attention over each
// reference graph, followed by attention-weighted fusion of the per-graph
// representations and a softmax relation classifier.
class Mgat {
 public:
  Mgat(MgatConfig cfg, int input_dim, int num_relations, Rng& rng);

  Mgat(const Mgat&) = delete;
  Mgat& operator=(const Mgat&) = delete;

  // One graph's node-level attention. `node_ids` fixes the node order; `d`
  // holds the matching input vectors. Returns one dim x 1 vector per node.
  std::vector<ad::Var> node_attention(ad::Tape& tape, const std::vector<std::string>& node_ids,
                                      const std::vector<ad::Var>& d, const ReferenceGraph& graph,
                                      AttentionDiag* diag = nullptr);

  struct Fusion {
    std::vector<ad::Var> z;  // fused node representations
    ad::Var beta;            // graph weights, one per input graph
  };
  // Graph-level attention across M per-graph representation sets.
  Fusion graph_attention(ad::Tape& tape, const std::vector<std::vector<ad::Var>>& per_graph);

  ad::Var logits(ad::Tape& tape, ad::Var z);

  struct Forward {
    std::vector<ad::Var> probs;  // per node, aligned with node_ids
    std::vector<double> beta;    // per graph, same order as `graphs`
  };
  Forward forward(ad::Tape& tape, const std::vector<std::string>& node_ids,
                  const std::vector<ad::Var>& d,
                  const std::vector<const ReferenceGraph*>& graphs);

  // Mean cross-entropy over the listed node indices.
  ad::Var build_loss(ad::Tape& tape, const std::vector<ad::Var>& probs,
                     const std::vector<int>& node_indices, const std::vector<int>& gold);

  std::vector<ad::Param*> parameters();
  std::vector<std::pair<std::string, ad::Param*>> named_parameters();
  std::map<std::string, ad::Mat> state() const;
  void load_state(const std::map<std::string, ad::Mat>& state);

  const MgatConfig& config() const { return cfg_; }
  int input_dim() const { return input_dim_; }
  int num_relations() const { return num_relations_; }

 private:
  MgatConfig cfg_;
  int input_dim_ = 0;
  int num_relations_ = 0;
  int head_dim_ = 0;

  struct Head {
    ad::Param W;      // head_dim x input_dim
    ad::Param a_src;  // head_dim x 1
    ad::Param a_dst;  // head_dim x 1
    Head(const std::string& prefix, int head_dim, int input_dim, Rng& rng);
  };
  std::vector<Head> heads_;
  ad::Param fuse_W_, fuse_b_, fuse_q_;  // graph-level attention
  ad::Param cls_W_, cls_b_;
};

}  // namespace mrefg
