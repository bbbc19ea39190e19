#include "mrefg/refgraph.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <unordered_map>
#include <unordered_set>

#include "mrefg/util.hpp"

namespace mrefg {

const char* to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::entity: return "entity";
    case GraphKind::verb: return "verb";
    case GraphKind::semantics: return "semantics";
  }
  return "?";
}

GraphKind graph_kind_from_string(const std::string& name) {
  if (name == "entity") return GraphKind::entity;
  if (name == "verb") return GraphKind::verb;
  if (name == "semantics") return GraphKind::semantics;
  throw ValidationError("unknown graph kind: " + name);
}

namespace {
std::pair<std::string, std::string> ordered(const std::string& u, const std::string& v) {
  return u < v ? std::make_pair(u, v) : std::make_pair(v, u);
}
}  // namespace

bool ReferenceGraph::has_edge(const std::string& u, const std::string& v) const {
  return edges_.count(ordered(u, v)) > 0;
}

double ReferenceGraph::edge_score(const std::string& u, const std::string& v) const {
  auto it = edges_.find(ordered(u, v));
  return it == edges_.end() ? 0.0 : it->second;
}

void ReferenceGraph::add_edge(const std::string& u, const std::string& v, double score) {
  if (u == v) return;  // no self-edges stored
  edges_[ordered(u, v)] = score;
  adjacency_[u].insert(v);
  adjacency_[v].insert(u);
}

void ReferenceGraph::remove_edge(const std::string& u, const std::string& v) {
  if (edges_.erase(ordered(u, v)) == 0) return;
  adjacency_[u].erase(v);
  adjacency_[v].erase(u);
}

const std::set<std::string>& ReferenceGraph::neighbors(const std::string& id) const {
  static const std::set<std::string> empty;
  auto it = adjacency_.find(id);
  return it == adjacency_.end() ? empty : it->second;
}

int ReferenceGraph::degree(const std::string& id) const {
  return static_cast<int>(neighbors(id).size());
}

std::vector<ReferenceGraph::Edge> ReferenceGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& [pair, score] : edges_) out.push_back({pair.first, pair.second, score});
  return out;
}

namespace {

const EntitySignature& sig_at(const EntitySignatureMap& sigs, const std::string& id) {
  auto it = sigs.find(id);
  if (it == sigs.end()) throw std::invalid_argument("missing entity signature for sample " + id);
  return it->second;
}

bool entity_rule(const EntitySignature& a, const EntitySignature& b) {
  if (!a.adjacent || !b.adjacent) return false;
  if (a.ner_types == b.ner_types) return true;
  // token overlap
  for (const auto& t : a.entity_tokens)
    if (b.entity_tokens.count(t)) return true;
  return false;
}

}  // namespace

ReferenceGraph build_entity_graph(const std::vector<std::string>& labeled_ids,
                                  const std::vector<std::string>& pool_ids,
                                  const EntitySignatureMap& sigs) {
  ReferenceGraph g(GraphKind::entity);
  // bucket the labeled side by NER type-set key and by entity token
  std::unordered_set<std::string> labeled_set(labeled_ids.begin(), labeled_ids.end());
  std::map<std::string, std::vector<std::string>> by_types;
  std::map<std::string, std::vector<std::string>> by_token;
  for (const auto& id : labeled_ids) {
    const EntitySignature& s = sig_at(sigs, id);
    if (!s.adjacent) continue;
    std::string key;
    for (const auto& t : s.ner_types) key += t + "|";
    by_types[key].push_back(id);
    for (const auto& t : s.entity_tokens) by_token[t].push_back(id);
  }
  auto connect = [&](const std::string& j) {
    const EntitySignature& sj = sig_at(sigs, j);
    if (!sj.adjacent) return;
    std::string key;
    for (const auto& t : sj.ner_types) key += t + "|";
    if (auto it = by_types.find(key); it != by_types.end())
      for (const auto& i : it->second)
        if (i != j) g.add_edge(i, j);
    for (const auto& t : sj.entity_tokens)
      if (auto it = by_token.find(t); it != by_token.end())
        for (const auto& i : it->second)
          if (i != j) g.add_edge(i, j);
  };
  for (const auto& j : labeled_ids) connect(j);
  for (const auto& j : pool_ids)
    if (!labeled_set.count(j)) connect(j);
  return g;
}

ReferenceGraph build_verb_graph(const std::vector<std::string>& labeled_ids,
                                const std::vector<std::string>& pool_ids,
                                const VerbSignatureMap& sigs) {
  ReferenceGraph g(GraphKind::verb);
  std::unordered_set<std::string> labeled_set(labeled_ids.begin(), labeled_ids.end());
  std::map<std::string, std::vector<std::string>> by_phrase;
  auto phrase_of = [&](const std::string& id) -> const std::optional<std::string>& {
    auto it = sigs.find(id);
    if (it == sigs.end()) throw std::invalid_argument("missing verb signature for sample " + id);
    return it->second.phrase;
  };
  for (const auto& id : labeled_ids)
    if (const auto& p = phrase_of(id)) by_phrase[*p].push_back(id);
  auto connect = [&](const std::string& j) {
    const auto& p = phrase_of(j);
    if (!p) return;
    if (auto it = by_phrase.find(*p); it != by_phrase.end())
      for (const auto& i : it->second)
        if (i != j) g.add_edge(i, j);
  };
  for (const auto& j : labeled_ids) connect(j);
  for (const auto& j : pool_ids)
    if (!labeled_set.count(j)) connect(j);
  return g;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

ReferenceGraph build_semantic_graph(const EmbeddingMap& labeled_embeddings,
                                    const EmbeddingMap& pool_embeddings, const GraphConfig& cfg) {
  ReferenceGraph g(GraphKind::semantics);

  std::vector<std::pair<std::string, const Eigen::VectorXd*>> labeled, pool;
  for (const auto& [id, v] : labeled_embeddings) {
    if (v.norm() == 0.0) {
      std::cerr << "mrefg: zero-norm embedding for " << id << ", no semantic edges\n";
      continue;
    }
    labeled.emplace_back(id, &v);
  }
  for (const auto& [id, v] : pool_embeddings) {
    if (labeled_embeddings.count(id)) continue;
    if (v.norm() == 0.0) {
      std::cerr << "mrefg: zero-norm embedding for " << id << ", no semantic edges\n";
      continue;
    }
    pool.emplace_back(id, &v);
  }

  std::vector<ReferenceGraph::Edge> qualifying;
  auto consider = [&](const std::string& i, const Eigen::VectorXd& a, const std::string& j,
                      const Eigen::VectorXd& b) {
    const double sim = cosine_similarity(a, b);
    if (sim > cfg.delta) qualifying.push_back({std::min(i, j), std::max(i, j), sim});
  };
  for (size_t x = 0; x < labeled.size(); ++x) {
    for (size_t y = x + 1; y < labeled.size(); ++y)
      consider(labeled[x].first, *labeled[x].second, labeled[y].first, *labeled[y].second);
    for (const auto& [j, v] : pool) consider(labeled[x].first, *labeled[x].second, j, *v);
  }

  if (cfg.max_degree > 0) {
    // highest-similarity edges win capacity; ids break ties
    std::sort(qualifying.begin(), qualifying.end(), [](const auto& l, const auto& r) {
      if (l.score != r.score) return l.score > r.score;
      return std::tie(l.a, l.b) < std::tie(r.a, r.b);
    });
    std::unordered_map<std::string, int> deg;
    for (const auto& e : qualifying) {
      if (deg[e.a] >= cfg.max_degree || deg[e.b] >= cfg.max_degree) continue;
      g.add_edge(e.a, e.b, e.score);
      ++deg[e.a];
      ++deg[e.b];
    }
  } else {
    for (const auto& e : qualifying) g.add_edge(e.a, e.b, e.score);
  }
  return g;
}

GraphSet update_graphs(const GraphSet& graphs, const std::vector<std::string>& newly_labeled,
                       const std::vector<std::string>& labeled_ids,
                       const std::vector<std::string>& pool_ids, const EntitySignatureMap& ent_sigs,
                       const VerbSignatureMap& verb_sigs, const EmbeddingMap& embeddings,
                       const GraphConfig& cfg) {
  GraphSet out = graphs;

  // Lexical rules are embedding-independent, so only pairs touching a newly
  // labeled endpoint can appear; existing edges stay.
  std::unordered_set<std::string> new_set(newly_labeled.begin(), newly_labeled.end());
  std::vector<std::string> others;  // every node that may pair with a promoted one
  for (const auto& id : labeled_ids) others.push_back(id);
  for (const auto& id : pool_ids) others.push_back(id);

  for (const auto& u : newly_labeled) {
    const EntitySignature& su = sig_at(ent_sigs, u);
    const auto& pu = verb_sigs.at(u).phrase;
    for (const auto& x : others) {
      if (x == u) continue;
      if (entity_rule(su, sig_at(ent_sigs, x))) out.entity.add_edge(u, x);
      if (pu) {
        const auto& px = verb_sigs.at(x).phrase;
        if (px && *px == *pu) out.verb.add_edge(u, x);
      }
    }
  }

  // Semantics: embeddings moved for every node, so re-qualify all pairs under
  // the supplied vectors (add newly qualified, drop the rest). Equals a
  // from-scratch rebuild by construction.
  EmbeddingMap labeled_emb, pool_emb;
  for (const auto& id : labeled_ids) {
    if (auto it = embeddings.find(id); it != embeddings.end()) labeled_emb[id] = it->second;
  }
  for (const auto& id : pool_ids) {
    if (auto it = embeddings.find(id); it != embeddings.end()) pool_emb[id] = it->second;
  }
  out.semantics = build_semantic_graph(labeled_emb, pool_emb, cfg);

  return out;
}

void export_edges(const std::vector<const ReferenceGraph*>& graphs, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write edge list: " + path);
  std::vector<const ReferenceGraph*> sorted = graphs;
  std::sort(sorted.begin(), sorted.end(),
            [](const ReferenceGraph* a, const ReferenceGraph* b) { return a->kind() < b->kind(); });
  char buf[64];
  for (const ReferenceGraph* g : sorted) {
    for (const auto& e : g->edges()) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.score);
      f << to_string(g->kind()) << "\t" << e.a << "\t" << e.b << "\t" << buf << "\n";
    }
  }
}

}  // namespace mrefg
