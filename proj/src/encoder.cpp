#include "mrefg/encoder.hpp"

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

ad::Mat embedding_init(long rows, long cols, Rng& rng) {
  ad::Mat m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = rng.uniform(-0.1, 0.1);
  return m;
}

int offset_index(int t, const Span& span, int max_offset) {
  int off = 0;
  if (t < span.start) off = t - span.start;
  else if (t > span.end) off = t - span.end;
  off = std::clamp(off, -max_offset, max_offset);
  return off + max_offset;
}

}  // namespace

Vocab::Vocab(const std::set<std::string>& items) : items_(items.begin(), items.end()) {
  for (size_t i = 0; i < items_.size(); ++i) index_[items_[i]] = static_cast<int>(i);
}

Vocab::Vocab(std::vector<std::string> sorted_items) : items_(std::move(sorted_items)) {
  for (size_t i = 0; i < items_.size(); ++i) index_[items_[i]] = static_cast<int>(i);
}

int Vocab::lookup(const std::string& s) const {
  auto it = index_.find(s);
  return it == index_.end() ? -1 : it->second;
}

Encoder::GruCell::GruCell(const std::string& prefix, int in_dim, int hidden, Rng& rng)
    : Wz(prefix + ".Wz", xavier_uniform(hidden, in_dim, rng)),
      Uz(prefix + ".Uz", xavier_uniform(hidden, hidden, rng)),
      bz(prefix + ".bz", ad::Mat::Zero(hidden, 1)),
      Wr(prefix + ".Wr", xavier_uniform(hidden, in_dim, rng)),
      Ur(prefix + ".Ur", xavier_uniform(hidden, hidden, rng)),
      br(prefix + ".br", ad::Mat::Zero(hidden, 1)),
      Wh(prefix + ".Wh", xavier_uniform(hidden, in_dim, rng)),
      Uh(prefix + ".Uh", xavier_uniform(hidden, hidden, rng)),
      bh(prefix + ".bh", ad::Mat::Zero(hidden, 1)) {}

Encoder::Encoder(EncoderConfig cfg, Vocab tokens, Vocab pos, Vocab ner, int num_relations,
                 const EmbeddingTable* pretrained, Rng& rng)
    : cfg_(cfg),
      tokens_(std::move(tokens)),
      pos_(std::move(pos)),
      ner_(std::move(ner)),
      num_relations_(num_relations),
      input_dim_(cfg.token_dim + 2 * cfg.tag_dim + 2 * cfg.position_dim),
      tok_emb_("tok_emb", embedding_init(tokens_.size(), cfg.token_dim, rng)),
      pos_emb_("pos_emb", embedding_init(pos_.size(), cfg.tag_dim, rng)),
      ner_emb_("ner_emb", embedding_init(ner_.size(), cfg.tag_dim, rng)),
      subj_off_emb_("subj_off_emb", embedding_init(2 * cfg.max_offset + 1, cfg.position_dim, rng)),
      obj_off_emb_("obj_off_emb", embedding_init(2 * cfg.max_offset + 1, cfg.position_dim, rng)),
      fwd_("gru_fwd", input_dim_, cfg.hidden, rng),
      bwd_("gru_bwd", input_dim_, cfg.hidden, rng),
      attn_a_("attn_a", xavier_uniform(2 * cfg.hidden, 1, rng)),
      cls_W_("cls_W", xavier_uniform(num_relations, 2 * cfg.hidden, rng)),
      cls_b_("cls_b", ad::Mat::Zero(num_relations, 1)) {
  if (num_relations_ < 2) throw ValidationError("encoder needs at least two relation classes");
  if (cfg_.dropout < 0.0 || cfg_.dropout >= 1.0) {
    throw ValidationError("dropout must lie in [0, 1)");
  }
  if (cfg_.hidden <= 0 || cfg_.token_dim <= 0 || cfg_.tag_dim <= 0 || cfg_.position_dim <= 0 ||
      cfg_.max_offset <= 0) {
    throw ValidationError("encoder dimensions must be positive");
  }
  if (pretrained != nullptr) {
    if (pretrained->dim() != cfg_.token_dim) {
      throw ValidationError("pretrained vector dimension " + std::to_string(pretrained->dim()) +
                            " does not match token_dim " + std::to_string(cfg_.token_dim));
    }
    const auto& items = tokens_.items();
    for (size_t i = 0; i < items.size(); ++i) {
      if (pretrained->contains(items[i])) {
        tok_emb_.value.row(static_cast<long>(i)) = pretrained->lookup(items[i]).transpose();
      }
    }
  }
}

Encoder::GruVars Encoder::gru_vars(ad::Tape& tape, GruCell& cell) {
  return GruVars{tape.leaf(cell.Wz), tape.leaf(cell.Uz), tape.leaf(cell.bz),
                 tape.leaf(cell.Wr), tape.leaf(cell.Ur), tape.leaf(cell.br),
                 tape.leaf(cell.Wh), tape.leaf(cell.Uh), tape.leaf(cell.bh)};
}

ad::Var Encoder::gru_step(ad::Tape& tape, const GruVars& g, ad::Var x, ad::Var h_prev) {
  ad::Var z = tape.sigmoid(tape.add_n({tape.matmul(g.Wz, x), tape.matmul(g.Uz, h_prev), g.bz}));
  ad::Var r = tape.sigmoid(tape.add_n({tape.matmul(g.Wr, x), tape.matmul(g.Ur, h_prev), g.br}));
  ad::Var hc = tape.tanh(
      tape.add_n({tape.matmul(g.Wh, x), tape.matmul(g.Uh, tape.cmul(r, h_prev)), g.bh}));
  return tape.add(tape.cmul(tape.one_minus(z), h_prev), tape.cmul(z, hc));
}

ad::Var Encoder::dropout_mask(ad::Tape& tape, ad::Var x, bool train, Rng* rng) {
  if (!train || cfg_.dropout <= 0.0) return x;
  if (rng == nullptr) throw std::invalid_argument("dropout requires an rng in training mode");
  double keep = 1.0 - cfg_.dropout;
  ad::Mat mask(tape.val(x).rows(), 1);
  for (long r = 0; r < mask.rows(); ++r) {
    mask(r, 0) = rng->uniform() < keep ? 1.0 / keep : 0.0;
  }
  return tape.cmul(x, tape.constant(std::move(mask)));
}

ad::Var Encoder::input_at(ad::Tape& tape, const Sample& sample, int t, bool train, Rng* rng) {
  std::vector<ad::Var> parts;
  parts.reserve(5);
  int ti = tokens_.lookup(to_lower(sample.tokens[static_cast<size_t>(t)]));
  parts.push_back(ti >= 0 ? tape.embedding_row(tok_emb_, ti)
                          : tape.constant(ad::Mat::Zero(cfg_.token_dim, 1)));
  int pi = pos_.lookup(sample.pos[static_cast<size_t>(t)]);
  parts.push_back(pi >= 0 ? tape.embedding_row(pos_emb_, pi)
                          : tape.constant(ad::Mat::Zero(cfg_.tag_dim, 1)));
  int ni = ner_.lookup(sample.ner[static_cast<size_t>(t)]);
  parts.push_back(ni >= 0 ? tape.embedding_row(ner_emb_, ni)
                          : tape.constant(ad::Mat::Zero(cfg_.tag_dim, 1)));
  parts.push_back(tape.embedding_row(subj_off_emb_, offset_index(t, sample.subj, cfg_.max_offset)));
  parts.push_back(tape.embedding_row(obj_off_emb_, offset_index(t, sample.obj, cfg_.max_offset)));
  return dropout_mask(tape, tape.concat_rows(parts), train, rng);
}

ad::Var Encoder::encode(ad::Tape& tape, const Sample& sample, bool train, Rng* rng,
                        std::vector<double>* attention_out) {
  validate_sample_shape(sample);
  const int n = static_cast<int>(sample.size());
  std::vector<ad::Var> xs;
  xs.reserve(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) xs.push_back(input_at(tape, sample, t, train, rng));

  GruVars gf = gru_vars(tape, fwd_);
  GruVars gb = gru_vars(tape, bwd_);
  std::vector<ad::Var> hf(static_cast<size_t>(n)), hb(static_cast<size_t>(n));
  ad::Var h = tape.constant(ad::Mat::Zero(cfg_.hidden, 1));
  for (int t = 0; t < n; ++t) {
    h = gru_step(tape, gf, xs[static_cast<size_t>(t)], h);
    hf[static_cast<size_t>(t)] = h;
  }
  h = tape.constant(ad::Mat::Zero(cfg_.hidden, 1));
  for (int t = n - 1; t >= 0; --t) {
    h = gru_step(tape, gb, xs[static_cast<size_t>(t)], h);
    hb[static_cast<size_t>(t)] = h;
  }

  std::vector<ad::Var> hs(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) {
    hs[static_cast<size_t>(t)] = tape.concat_rows({hf[static_cast<size_t>(t)], hb[static_cast<size_t>(t)]});
  }

  ad::Var a = tape.leaf(attn_a_);
  std::vector<ad::Var> scores(static_cast<size_t>(n));
  for (int t = 0; t < n; ++t) scores[static_cast<size_t>(t)] = tape.dot(a, hs[static_cast<size_t>(t)]);
  ad::Var alpha = tape.softmax(tape.concat_rows(scores));
  if (attention_out != nullptr) {
    const ad::Mat& av = tape.val(alpha);
    attention_out->assign(av.data(), av.data() + av.rows());
  }
  ad::Var d = tape.weighted_sum(hs, alpha);
  return dropout_mask(tape, d, train, rng);
}

ad::Var Encoder::logits(ad::Tape& tape, ad::Var d) {
  return tape.add(tape.matmul(tape.leaf(cls_W_), d), tape.leaf(cls_b_));
}

ad::Var Encoder::build_loss(ad::Tape& tape, const std::vector<const Sample*>& samples,
                            const std::vector<int>& gold, bool train, Rng* rng) {
  if (samples.empty() || samples.size() != gold.size()) {
    throw std::invalid_argument("build_loss: samples and labels must align and be non-empty");
  }
  std::vector<ad::Var> losses;
  losses.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= num_relations_) {
      throw std::invalid_argument("build_loss: label index out of range");
    }
    ad::Var d = encode(tape, *samples[i], train, rng);
    ad::Var probs = tape.softmax(logits(tape, d));
    losses.push_back(tape.scale(tape.log_clamped(tape.pick(probs, gold[i])), -1.0));
  }
  return tape.mean_n(losses);
}

double Encoder::train_batch(const std::vector<const Sample*>& samples,
                            const std::vector<int>& gold, Optimizer& opt, Rng& rng) {
  ad::Tape tape;
  ad::Var loss = build_loss(tape, samples, gold, true, &rng);
  double value = tape.scalar(loss);
  if (!std::isfinite(value)) {
    throw std::runtime_error("training loss is not finite; lower the learning rate or check data");
  }
  tape.backward(loss);
  opt.step();
  return value;
}

Eigen::VectorXd Encoder::predict_proba(const Sample& sample) {
  ad::Tape tape;
  ad::Var d = encode(tape, sample, false, nullptr);
  ad::Var probs = tape.softmax(logits(tape, d));
  return tape.val(probs).col(0);
}

int Encoder::predict(const Sample& sample) {
  Eigen::VectorXd p = predict_proba(sample);
  int best = 0;
  p.maxCoeff(&best);
  return best;
}

Eigen::VectorXd Encoder::sentence_embedding(const Sample& sample) {
  ad::Tape tape;
  ad::Var d = encode(tape, sample, false, nullptr);
  return tape.val(d).col(0);
}

std::vector<std::pair<std::string, ad::Param*>> Encoder::named_parameters() {
  std::vector<std::pair<std::string, ad::Param*>> out;
  for (ad::Param* p : {&tok_emb_, &pos_emb_, &ner_emb_, &subj_off_emb_, &obj_off_emb_}) {
    out.emplace_back(p->name, p);
  }
  for (GruCell* g : {&fwd_, &bwd_}) {
    for (ad::Param* p : {&g->Wz, &g->Uz, &g->bz, &g->Wr, &g->Ur, &g->br, &g->Wh, &g->Uh, &g->bh}) {
      out.emplace_back(p->name, p);
    }
  }
  for (ad::Param* p : {&attn_a_, &cls_W_, &cls_b_}) out.emplace_back(p->name, p);
  return out;
}

std::vector<ad::Param*> Encoder::parameters() {
  std::vector<ad::Param*> out;
  for (auto& [name, p] : named_parameters()) {
    if (!cfg_.finetune_tokens && name == "tok_emb") continue;
    out.push_back(p);
  }
  return out;
}

std::map<std::string, ad::Mat> Encoder::state() const {
  std::map<std::string, ad::Mat> out;
  auto self = const_cast<Encoder*>(this);
  for (auto& [name, p] : self->named_parameters()) out[name] = p->value;
  return out;
}

void Encoder::load_state(const std::map<std::string, ad::Mat>& state) {
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
