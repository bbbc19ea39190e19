#include "mrefg/mgat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrefg {

namespace {

ad::Mat xavier_uniform(long rows, long cols, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  ad::Mat m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

Mgat::Head::Head(const std::string& prefix, int head_dim, int input_dim, Rng& rng)
    : W(prefix + ".W", xavier_uniform(head_dim, input_dim, rng)),
      a_src(prefix + ".a_src", xavier_uniform(head_dim, 1, rng)),
      a_dst(prefix + ".a_dst", xavier_uniform(head_dim, 1, rng)) {}

Mgat::Mgat(MgatConfig cfg, int input_dim, int num_relations, Rng& rng)
    : cfg_(cfg),
      input_dim_(input_dim),
      num_relations_(num_relations),
      head_dim_(cfg.heads > 0 ? cfg.dim / cfg.heads : 0),
      fuse_W_("fuse.W", xavier_uniform(cfg.fusion_dim, cfg.dim, rng)),
      fuse_b_("fuse.b", ad::Mat::Zero(cfg.fusion_dim, 1)),
      fuse_q_("fuse.q", xavier_uniform(cfg.fusion_dim, 1, rng)),
      cls_W_("cls.W", xavier_uniform(num_relations, cfg.dim, rng)),
      cls_b_("cls.b", ad::Mat::Zero(num_relations, 1)) {
  if (cfg_.heads <= 0 || cfg_.dim <= 0 || cfg_.fusion_dim <= 0) {
    throw ValidationError("graph attention dimensions must be positive");
  }
  if (cfg_.dim % cfg_.heads != 0) {
    throw ValidationError("dim must be divisible by the head count");
  }
  if (input_dim_ <= 0) throw ValidationError("input dimension must be positive");
  if (num_relations_ < 2) throw ValidationError("need at least two relation classes");
  heads_.reserve(static_cast<size_t>(cfg_.heads));
  for (int k = 0; k < cfg_.heads; ++k) {
    heads_.emplace_back("head" + std::to_string(k), head_dim_, input_dim_, rng);
  }
}

std::vector<ad::Var> Mgat::node_attention(ad::Tape& tape,
                                          const std::vector<std::string>& node_ids,
                                          const std::vector<ad::Var>& d,
                                          const ReferenceGraph& graph, AttentionDiag* diag) {
  if (node_ids.size() != d.size()) {
    throw std::invalid_argument("node_attention: ids and vectors must align");
  }
  const size_t n = node_ids.size();
  std::map<std::string, int> index;
  for (size_t i = 0; i < n; ++i) index[node_ids[i]] = static_cast<int>(i);

  // Closed neighborhoods, in node order.
  std::vector<std::vector<int>> nbrs(n);
  for (size_t i = 0; i < n; ++i) {
    std::vector<int>& nb = nbrs[i];
    nb.push_back(static_cast<int>(i));
    for (const std::string& other : graph.neighbors(node_ids[i])) {
      auto it = index.find(other);
      if (it == index.end()) {
        throw ValidationError("graph neighbor " + other + " has no input vector");
      }
      nb.push_back(it->second);
    }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  if (diag != nullptr) {
    diag->alpha.assign(n, std::vector<std::vector<std::pair<int, double>>>(
                              static_cast<size_t>(cfg_.heads)));
  }

  std::vector<std::vector<ad::Var>> per_head(static_cast<size_t>(cfg_.heads));
  for (int k = 0; k < cfg_.heads; ++k) {
    Head& head = heads_[static_cast<size_t>(k)];
    ad::Var W = tape.leaf(head.W);
    ad::Var a_src = tape.leaf(head.a_src);
    ad::Var a_dst = tape.leaf(head.a_dst);
    std::vector<ad::Var> u(n), s_src(n), s_dst(n);
    for (size_t j = 0; j < n; ++j) {
      u[j] = tape.matmul(W, d[j]);
      s_src[j] = tape.dot(a_src, u[j]);
      s_dst[j] = tape.dot(a_dst, u[j]);
    }
    per_head[static_cast<size_t>(k)].resize(n);
    for (size_t i = 0; i < n; ++i) {
      const std::vector<int>& nb = nbrs[i];
      std::vector<ad::Var> scores, us;
      scores.reserve(nb.size());
      us.reserve(nb.size());
      for (int j : nb) {
        scores.push_back(tape.leaky_relu(
            tape.add(s_src[i], s_dst[static_cast<size_t>(j)]), cfg_.leaky_slope));
        us.push_back(u[static_cast<size_t>(j)]);
      }
      ad::Var alpha = tape.softmax(tape.concat_rows(scores));
      if (diag != nullptr) {
        const ad::Mat& av = tape.val(alpha);
        auto& slot = diag->alpha[i][static_cast<size_t>(k)];
        for (size_t p = 0; p < nb.size(); ++p) {
          slot.emplace_back(nb[p], av(static_cast<long>(p), 0));
        }
      }
      per_head[static_cast<size_t>(k)][i] = tape.sigmoid(tape.weighted_sum(us, alpha));
    }
  }

  std::vector<ad::Var> z(n);
  for (size_t i = 0; i < n; ++i) {
    std::vector<ad::Var> parts;
    parts.reserve(static_cast<size_t>(cfg_.heads));
    for (int k = 0; k < cfg_.heads; ++k) parts.push_back(per_head[static_cast<size_t>(k)][i]);
    z[i] = tape.concat_rows(parts);
  }
  return z;
}

Mgat::Fusion Mgat::graph_attention(ad::Tape& tape,
                                   const std::vector<std::vector<ad::Var>>& per_graph) {
  if (per_graph.empty()) throw std::invalid_argument("graph_attention: no graphs");
  const size_t n = per_graph[0].size();
  if (n == 0) throw std::invalid_argument("graph_attention: no nodes");
  for (const auto& g : per_graph) {
    if (g.size() != n) throw std::invalid_argument("graph_attention: node counts disagree");
  }

  ad::Var W = tape.leaf(fuse_W_);
  ad::Var b = tape.leaf(fuse_b_);
  ad::Var q = tape.leaf(fuse_q_);
  std::vector<ad::Var> graph_scores;
  graph_scores.reserve(per_graph.size());
  for (const auto& g : per_graph) {
    std::vector<ad::Var> node_scores;
    node_scores.reserve(n);
    for (const ad::Var& zi : g) {
      node_scores.push_back(tape.dot(q, tape.tanh(tape.add(tape.matmul(W, zi), b))));
    }
    graph_scores.push_back(tape.mean_n(node_scores));
  }
  ad::Var beta = tape.softmax(tape.concat_rows(graph_scores));

  Fusion out;
  out.beta = beta;
  out.z.resize(n);
  for (size_t i = 0; i < n; ++i) {
    std::vector<ad::Var> slices;
    slices.reserve(per_graph.size());
    for (const auto& g : per_graph) slices.push_back(g[i]);
    out.z[i] = tape.weighted_sum(slices, beta);
  }
  return out;
}

ad::Var Mgat::logits(ad::Tape& tape, ad::Var z) {
  return tape.add(tape.matmul(tape.leaf(cls_W_), z), tape.leaf(cls_b_));
}

Mgat::Forward Mgat::forward(ad::Tape& tape, const std::vector<std::string>& node_ids,
                            const std::vector<ad::Var>& d,
                            const std::vector<const ReferenceGraph*>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("forward: need at least one graph");
  if (node_ids.empty()) throw std::invalid_argument("forward: need at least one node");
  std::vector<std::vector<ad::Var>> per_graph;
  per_graph.reserve(graphs.size());
  for (const ReferenceGraph* g : graphs) {
    per_graph.push_back(node_attention(tape, node_ids, d, *g));
  }
  Fusion fusion = graph_attention(tape, per_graph);
  Forward out;
  out.probs.reserve(node_ids.size());
  for (const ad::Var& z : fusion.z) out.probs.push_back(tape.softmax(logits(tape, z)));
  const ad::Mat& bv = tape.val(fusion.beta);
  out.beta.assign(bv.data(), bv.data() + bv.rows());
  return out;
}

ad::Var Mgat::build_loss(ad::Tape& tape, const std::vector<ad::Var>& probs,
                         const std::vector<int>& node_indices, const std::vector<int>& gold) {
  if (node_indices.empty() || node_indices.size() != gold.size()) {
    throw std::invalid_argument("build_loss: node indices and labels must align");
  }
  std::vector<ad::Var> losses;
  losses.reserve(node_indices.size());
  for (size_t i = 0; i < node_indices.size(); ++i) {
    int idx = node_indices[i];
    if (idx < 0 || idx >= static_cast<int>(probs.size())) {
      throw std::invalid_argument("build_loss: node index out of range");
    }
    if (gold[i] < 0 || gold[i] >= num_relations_) {
      throw std::invalid_argument("build_loss: label index out of range");
    }
    losses.push_back(
        tape.scale(tape.log_clamped(tape.pick(probs[static_cast<size_t>(idx)], gold[i])), -1.0));
  }
  return tape.mean_n(losses);
}

std::vector<std::pair<std::string, ad::Param*>> Mgat::named_parameters() {
  std::vector<std::pair<std::string, ad::Param*>> out;
  for (Head& h : heads_) {
    out.emplace_back(h.W.name, &h.W);
    out.emplace_back(h.a_src.name, &h.a_src);
    out.emplace_back(h.a_dst.name, &h.a_dst);
  }
  for (ad::Param* p : {&fuse_W_, &fuse_b_, &fuse_q_, &cls_W_, &cls_b_}) {
    out.emplace_back(p->name, p);
  }
  return out;
}

std::vector<ad::Param*> Mgat::parameters() {
  std::vector<ad::Param*> out;
  for (auto& [name, p] : named_parameters()) out.push_back(p);
  return out;
}

std::map<std::string, ad::Mat> Mgat::state() const {
  std::map<std::string, ad::Mat> out;
  auto self = const_cast<Mgat*>(this);
  for (auto& [name, p] : self->named_parameters()) out[name] = p->value;
  return out;
}

void Mgat::load_state(const std::map<std::string, ad::Mat>& state) {
  for (auto& [name, p] : named_parameters()) {
    auto it = state.find(name);
    if (it == state.end()) throw ValidationError("checkpoint is missing tensor " + name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      throw ValidationError("checkpoint tensor " + name + " has mismatched shape");
    }
    p->value = it->second;
    p->zero_grad();
  }
}

}  // namespace mrefg
