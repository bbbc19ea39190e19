#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mrefg/features.hpp"

namespace mrefg {

enum class GraphKind { entity, verb, semantics };

const char* to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

struct GraphConfig {
  double delta = 0.9;        // cosine threshold for the semantics graph
  int max_degree = 50;       // per-node cap on the semantics graph (<=0 disables)
  int adjacency_window = 0;  // max tokens allowed between "adjacent" entities
};

// Undirected typed edge set over sample ids. Every edge has at least one
// endpoint in the labeled set; adjacency is kept symmetric. Ordered
// containers throughout so iteration order is deterministic.
class ReferenceGraph {
 public:
  struct Edge {
    std::string a, b;  // a < b
    double score = 1.0;
    auto operator<=>(const Edge&) const = default;
  };

  explicit ReferenceGraph(GraphKind kind) : kind_(kind) {}

  GraphKind kind() const { return kind_; }
  size_t edge_count() const { return edges_.size(); }
  bool has_edge(const std::string& u, const std::string& v) const;
  double edge_score(const std::string& u, const std::string& v) const;  // 0 when absent
  void add_edge(const std::string& u, const std::string& v, double score = 1.0);
  void remove_edge(const std::string& u, const std::string& v);

  const std::set<std::string>& neighbors(const std::string& id) const;
  int degree(const std::string& id) const;

  std::vector<Edge> edges() const;  // sorted by (a, b)

  bool operator==(const ReferenceGraph& other) const {
    return kind_ == other.kind_ && edges_ == other.edges_;
  }

 private:
  GraphKind kind_;
  std::map<std::pair<std::string, std::string>, double> edges_;
  std::map<std::string, std::set<std::string>> adjacency_;
};

using EntitySignatureMap = std::map<std::string, EntitySignature>;
using VerbSignatureMap = std::map<std::string, VerbSignature>;
using EmbeddingMap = std::map<std::string, Eigen::VectorXd>;

// Entity rule: both endpoints adjacent-entity samples, i labeled, and equal
// NER type sets or overlapping entity token sets.
ReferenceGraph build_entity_graph(const std::vector<std::string>& labeled_ids,
                                  const std::vector<std::string>& pool_ids,
                                  const EntitySignatureMap& sigs);

// Verb rule: i labeled, both phrases present and equal.
ReferenceGraph build_verb_graph(const std::vector<std::string>& labeled_ids,
                                const std::vector<std::string>& pool_ids,
                                const VerbSignatureMap& sigs);

// Semantic rule: i labeled and cosine(d_i, d_j) > delta; per-node degree
// capped keeping highest-similarity edges. Zero-norm vectors take part in no
// edges.
ReferenceGraph build_semantic_graph(const EmbeddingMap& labeled_embeddings,
                                    const EmbeddingMap& pool_embeddings, const GraphConfig& cfg);

struct GraphSet {
  ReferenceGraph entity{GraphKind::entity};
  ReferenceGraph verb{GraphKind::verb};
  ReferenceGraph semantics{GraphKind::semantics};

  bool operator==(const GraphSet&) const = default;
};

// Promotes newly_labeled ids to labeled endpoints. Lexical graphs gain the
// newly enabled edges (never lose any); the semantics graph is re-qualified
// under the supplied embeddings so that the result equals a from-scratch
// rebuild. Returns a new value; inputs are untouched.
GraphSet update_graphs(const GraphSet& graphs, const std::vector<std::string>& newly_labeled,
                       const std::vector<std::string>& labeled_ids,
                       const std::vector<std::string>& pool_ids, const EntitySignatureMap& ent_sigs,
                       const VerbSignatureMap& verb_sigs, const EmbeddingMap& embeddings,
                       const GraphConfig& cfg);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// One line per edge, "kind\tid_a\tid_b\tscore", sorted by (kind, a, b).
void export_edges(const std::vector<const ReferenceGraph*>& graphs, const std::string& path);

}  // namespace mrefg
