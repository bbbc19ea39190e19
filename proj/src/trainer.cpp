#include "mrefg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace mrefg {

std::vector<std::pair<std::string, std::string>> select_augmentation(
    const std::vector<PredictionPair>& pairs, double fraction, const RelationVocab& vocab,
    size_t pool_size) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw std::invalid_argument("selection fraction must lie in (0, 1]");
  }
  if (pairs.empty()) return {};

  struct Candidate {
    std::string id;
    int label;
    double score;
  };
  std::vector<Candidate> agreed;
  for (const PredictionPair& pair : pairs) {
    if (pair.p.size() != vocab.size() || pair.m.size() != vocab.size()) {
      throw std::invalid_argument("prediction width does not match the relation vocabulary");
    }
    int ap = 0, am = 0;
    double cp = pair.p.maxCoeff(&ap);
    double cm = pair.m.maxCoeff(&am);
    if (ap != am) continue;
    agreed.push_back({pair.id, ap, std::sqrt(cp * cm)});
  }
  std::sort(agreed.begin(), agreed.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  size_t take = static_cast<size_t>(
      std::ceil(fraction * static_cast<double>(pool_size)));
  take = std::min(take, agreed.size());

  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) {
    out.emplace_back(agreed[i].id, vocab.label(agreed[i].label));
  }
  return out;
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.labeled_frac <= 0.0 || cfg.labeled_frac > 1.0) {
    throw ValidationError("labeled_frac must lie in (0, 1]");
  }
  if (cfg.unlabeled_frac < 0.0 || cfg.labeled_frac + cfg.unlabeled_frac > 1.0) {
    throw ValidationError("labeled_frac + unlabeled_frac must not exceed 1");
  }
  if (cfg.select_frac <= 0.0 || cfg.select_frac > 1.0) {
    throw ValidationError("select_frac must lie in (0, 1]");
  }
  if (cfg.graphs.empty()) throw ValidationError("at least one reference graph is required");
  std::set<GraphKind> seen(cfg.graphs.begin(), cfg.graphs.end());
  if (seen.size() != cfg.graphs.size()) throw ValidationError("duplicate graph kind");
  if (cfg.batch_size < 1) throw ValidationError("batch_size must be positive");
  if (cfg.init_epochs < 1) throw ValidationError("init_epochs must be positive");
  if (cfg.epochs_p < 1 || cfg.epochs_m < 1) {
    throw ValidationError("per-iteration epoch counts must be positive");
  }
  if (cfg.max_iters < 0) throw ValidationError("max_iters must be non-negative");
  if (cfg.patience < 1) throw ValidationError("patience must be positive");
  if (cfg.optimizer != "adam" && cfg.optimizer != "sgd") {
    throw ValidationError("optimizer must be adam or sgd");
  }
  if (cfg.lr_p <= 0.0 || cfg.lr_m <= 0.0) throw ValidationError("learning rates must be positive");
  if (cfg.graph.delta < -1.0 || cfg.graph.delta > 1.0) {
    throw ValidationError("delta must lie in [-1, 1]");
  }
}

SemiSupervisedRunner::SemiSupervisedRunner(TrainConfig cfg, std::vector<Sample> corpus)
    : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  validate_train_config(cfg_);
  relations_ = build_relation_vocab(corpus);
  split_ = split_corpus(corpus, cfg_.labeled_frac, cfg_.unlabeled_frac, cfg_.seed);
  if (split_.dev.empty() || split_.test.empty()) {
    throw ValidationError("corpus too small: empty dev or test split");
  }

  for (const Sample& s : split_.labeled) {
    node_samples_[s.id] = s;
    labeled_ids_.push_back(s.id);
    labels_[s.id] = relations_.index(*s.relation);
  }
  for (const Sample& s : split_.unlabeled) {
    node_samples_[s.id] = s;
    pool_ids_.push_back(s.id);
  }
  for (const auto& [id, s] : node_samples_) {
    node_ids_.push_back(id);
    ent_sigs_[id] = entity_signature(s, cfg_.graph.adjacency_window);
    verb_sigs_[id] = verb_signature(s);
  }

  build_models();
}

void SemiSupervisedRunner::build_models() {
  std::set<std::string> toks, pos, ner;
  auto absorb = [&](const std::vector<Sample>& samples) {
    for (const Sample& s : samples) {
      for (const std::string& t : s.tokens) toks.insert(to_lower(t));
      pos.insert(s.pos.begin(), s.pos.end());
      ner.insert(s.ner.begin(), s.ner.end());
    }
  };
  absorb(split_.labeled);
  absorb(split_.unlabeled);
  absorb(split_.dev);
  absorb(split_.test);

  if (!cfg_.embeddings_path.empty()) {
    pretrained_ = std::make_unique<EmbeddingTable>(
        EmbeddingTable::load(cfg_.embeddings_path, cfg_.encoder.token_dim));
  }
  encoder_ = std::make_unique<Encoder>(cfg_.encoder, Vocab(toks), Vocab(pos), Vocab(ner),
                                       relations_.size(), pretrained_.get(), rng_);
  mgat_ = std::make_unique<Mgat>(cfg_.mgat, encoder_->embedding_dim(), relations_.size(), rng_);

  OptimizerConfig op;
  op.algo = cfg_.optimizer;
  op.lr = cfg_.lr_p;
  opt_p_ = std::make_unique<Optimizer>(encoder_->parameters(), op);

  OptimizerConfig om = op;
  om.lr = cfg_.lr_m;
  std::vector<ad::Param*> mparams = mgat_->parameters();
  if (cfg_.mgat_backprop_encoder) {
    for (ad::Param* p : encoder_->parameters()) mparams.push_back(p);
  }
  opt_m_ = std::make_unique<Optimizer>(std::move(mparams), om);
}

void SemiSupervisedRunner::refresh_embeddings() {
  for (const std::string& id : node_ids_) {
    embeddings_[id] = encoder_->sentence_embedding(node_samples_.at(id));
  }
}

void SemiSupervisedRunner::rebuild_graphs() {
  std::vector<std::string> lab = labeled_ids_;
  std::sort(lab.begin(), lab.end());
  std::vector<std::string> pool = pool_ids_;
  std::sort(pool.begin(), pool.end());
  graphs_.entity = build_entity_graph(lab, pool, ent_sigs_);
  graphs_.verb = build_verb_graph(lab, pool, verb_sigs_);
  EmbeddingMap lab_emb, pool_emb;
  for (const std::string& id : lab) lab_emb[id] = embeddings_.at(id);
  for (const std::string& id : pool) pool_emb[id] = embeddings_.at(id);
  graphs_.semantics = build_semantic_graph(lab_emb, pool_emb, cfg_.graph);
}

double SemiSupervisedRunner::encoder_epoch() {
  std::vector<std::string> ids = labeled_ids_;
  rng_.shuffle(ids);
  double total = 0.0;
  size_t count = 0;
  for (size_t at = 0; at < ids.size(); at += static_cast<size_t>(cfg_.batch_size)) {
    size_t end = std::min(ids.size(), at + static_cast<size_t>(cfg_.batch_size));
    std::vector<const Sample*> batch;
    std::vector<int> gold;
    for (size_t i = at; i < end; ++i) {
      batch.push_back(&node_samples_.at(ids[i]));
      gold.push_back(labels_.at(ids[i]));
    }
    double loss = encoder_->train_batch(batch, gold, *opt_p_, rng_);
    total += loss * static_cast<double>(batch.size());
    count += batch.size();
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

std::vector<const ReferenceGraph*> SemiSupervisedRunner::active_graphs() const {
  std::vector<const ReferenceGraph*> out;
  for (GraphKind k : cfg_.graphs) {
    switch (k) {
      case GraphKind::entity: out.push_back(&graphs_.entity); break;
      case GraphKind::verb: out.push_back(&graphs_.verb); break;
      case GraphKind::semantics: out.push_back(&graphs_.semantics); break;
    }
  }
  return out;
}

std::pair<double, std::vector<double>> SemiSupervisedRunner::mgat_step() {
  ad::Tape tape;
  std::vector<ad::Var> d;
  d.reserve(node_ids_.size());
  for (const std::string& id : node_ids_) {
    if (cfg_.mgat_backprop_encoder) {
      d.push_back(encoder_->encode(tape, node_samples_.at(id), false, nullptr));
    } else {
      d.push_back(tape.constant(embeddings_.at(id)));
    }
  }
  Mgat::Forward fwd = mgat_->forward(tape, node_ids_, d, active_graphs());

  std::vector<int> indices, gold;
  for (size_t i = 0; i < node_ids_.size(); ++i) {
    auto it = labels_.find(node_ids_[i]);
    if (it == labels_.end()) continue;
    indices.push_back(static_cast<int>(i));
    gold.push_back(it->second);
  }
  ad::Var loss = mgat_->build_loss(tape, fwd.probs, indices, gold);
  double value = tape.scalar(loss);
  if (!std::isfinite(value)) {
    throw std::runtime_error("graph-module loss is not finite; lower the learning rate");
  }
  tape.backward(loss);
  opt_m_->step();
  return {value, fwd.beta};
}

std::vector<PredictionPair> SemiSupervisedRunner::predict_pool(std::vector<double>* beta_out) {
  std::vector<PredictionPair> pairs;
  if (node_ids_.empty()) return pairs;
  ad::Tape tape;
  std::vector<ad::Var> d;
  d.reserve(node_ids_.size());
  for (const std::string& id : node_ids_) d.push_back(tape.constant(embeddings_.at(id)));
  Mgat::Forward fwd = mgat_->forward(tape, node_ids_, d, active_graphs());
  if (beta_out != nullptr) *beta_out = fwd.beta;

  std::map<std::string, size_t> index;
  for (size_t i = 0; i < node_ids_.size(); ++i) index[node_ids_[i]] = i;
  for (const std::string& id : pool_ids_) {
    PredictionPair pair;
    pair.id = id;
    pair.p = encoder_->predict_proba(node_samples_.at(id));
    pair.m = tape.val(fwd.probs[index.at(id)]).col(0);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

Metrics SemiSupervisedRunner::evaluate(const std::vector<Sample>& samples) {
  std::map<std::string, std::string> pred, gold;
  for (const Sample& s : samples) {
    pred[s.id] = relations_.label(encoder_->predict(s));
    gold[s.id] = *s.relation;
  }
  return score(pred, gold, relations_);
}

void SemiSupervisedRunner::promote(const std::vector<std::pair<std::string, std::string>>& selected) {
  for (const auto& [id, label] : selected) {
    if (labels_.count(id) > 0) throw ValidationError("sample " + id + " promoted twice");
    labels_[id] = relations_.index(label);
    labeled_ids_.push_back(id);
    pool_ids_.erase(std::remove(pool_ids_.begin(), pool_ids_.end(), id), pool_ids_.end());
  }
}

std::map<std::string, long> SemiSupervisedRunner::edge_count_map() const {
  std::map<std::string, long> out;
  for (GraphKind k : cfg_.graphs) {
    const ReferenceGraph* g = nullptr;
    switch (k) {
      case GraphKind::entity: g = &graphs_.entity; break;
      case GraphKind::verb: g = &graphs_.verb; break;
      case GraphKind::semantics: g = &graphs_.semantics; break;
    }
    out[to_string(k)] = static_cast<long>(g->edge_count());
  }
  return out;
}

std::map<std::string, double> SemiSupervisedRunner::beta_map(
    const std::vector<double>& beta) const {
  std::map<std::string, double> out;
  for (size_t i = 0; i < cfg_.graphs.size() && i < beta.size(); ++i) {
    out[to_string(cfg_.graphs[i])] = beta[i];
  }
  return out;
}

RunResult SemiSupervisedRunner::run() {
  TrainHistory history;

  // Supervised warm-up on the initially labeled set.
  double loss = 0.0;
  for (int e = 0; e < cfg_.init_epochs; ++e) loss = encoder_epoch();
  refresh_embeddings();
  rebuild_graphs();

  IterationRecord r0;
  r0.iteration = 0;
  r0.train_loss = loss;
  r0.dev = evaluate(split_.dev);
  r0.test = evaluate(split_.test);
  r0.labeled_size = static_cast<int>(labeled_ids_.size());
  r0.pool_size = static_cast<int>(pool_ids_.size());
  r0.edge_counts = edge_count_map();
  history.push_back(r0);

  double best_f1 = r0.dev.f1;
  int best_iteration = 0;
  std::map<std::string, ad::Mat> best_encoder = encoder_->state();
  std::map<std::string, ad::Mat> best_mgat = mgat_->state();
  int stale = 0;

  const size_t original_pool = pool_ids_.size();
  const auto& hidden_gold = split_.hidden_gold_for_diagnostics();

  for (int iter = 1; iter <= cfg_.max_iters; ++iter) {
    if (pool_ids_.empty()) break;

    for (int e = 0; e < cfg_.epochs_p; ++e) loss = encoder_epoch();
    refresh_embeddings();
    for (int e = 0; e < cfg_.epochs_m; ++e) mgat_step();

    IterationRecord rec;
    rec.iteration = iter;
    rec.train_loss = loss;
    rec.dev = evaluate(split_.dev);
    rec.test = evaluate(split_.test);

    std::vector<double> beta;
    std::vector<PredictionPair> pairs = predict_pool(&beta);
    rec.beta = beta_map(beta);
    for (const PredictionPair& pair : pairs) {
      if (pair.agree()) ++rec.agreeing;
    }

    size_t base = cfg_.select_frac_of_original ? original_pool : pool_ids_.size();
    auto selected = select_augmentation(pairs, cfg_.select_frac, relations_, base);
    rec.selected = selected;
    rec.augmented = static_cast<int>(selected.size());
    if (!selected.empty()) {
      long correct = 0;
      for (const auto& [id, label] : selected) {
        auto it = hidden_gold.find(id);
        if (it != hidden_gold.end() && it->second == label) ++correct;
      }
      rec.augmentation_precision =
          static_cast<double>(correct) / static_cast<double>(selected.size());
    }

    promote(selected);
    std::vector<std::string> newly;
    newly.reserve(selected.size());
    for (const auto& [id, label] : selected) newly.push_back(id);
    std::vector<std::string> lab = labeled_ids_, pool = pool_ids_;
    std::sort(lab.begin(), lab.end());
    std::sort(pool.begin(), pool.end());
    graphs_ = update_graphs(graphs_, newly, lab, pool, ent_sigs_, verb_sigs_, embeddings_,
                            cfg_.graph);

    rec.labeled_size = static_cast<int>(labeled_ids_.size());
    rec.pool_size = static_cast<int>(pool_ids_.size());
    rec.edge_counts = edge_count_map();
    history.push_back(rec);

    if (rec.dev.f1 > best_f1) {
      best_f1 = rec.dev.f1;
      best_iteration = iter;
      best_encoder = encoder_->state();
      best_mgat = mgat_->state();
      stale = 0;
    } else if (++stale >= cfg_.patience) {
      break;
    }
  }

  encoder_->load_state(best_encoder);
  mgat_->load_state(best_mgat);

  RunResult out;
  out.history = std::move(history);
  out.best_iteration = best_iteration;
  out.best_dev = out.history[static_cast<size_t>(best_iteration)].dev;
  out.best_test = out.history[static_cast<size_t>(best_iteration)].test;
  return out;
}

}  // namespace mrefg
