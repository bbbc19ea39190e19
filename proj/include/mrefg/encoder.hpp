#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mrefg/autodiff.hpp"
#include "mrefg/corpus.hpp"
#include "mrefg/features.hpp"
#include "mrefg/optim.hpp"
#include "mrefg/util.hpp"

namespace mrefg {

// Sorted, immutable symbol table. Unknown symbols map to -1.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(const std::set<std::string>& items);
  explicit Vocab(std::vector<std::string> sorted_items);

  int lookup(const std::string& s) const;
  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
  std::map<std::string, int> index_;
};

struct EncoderConfig {
  int token_dim = 300;
  int tag_dim = 30;       // POS and NER channels
  int position_dim = 30;  // each of the two entity-offset channels
  int hidden = 200;       // per direction
  int max_offset = 100;   // offsets clipped to [-max_offset, max_offset]
  double dropout = 0.5;
  bool finetune_tokens = true;
};

// Bidirectional recurrent sentence encoder with attention pooling and a
// softmax relation classifier. Produces the per-sentence representation d
// that the reference graphs and the graph-attention module consume.
class Encoder {
 public:
  Encoder(EncoderConfig cfg, Vocab tokens, Vocab pos, Vocab ner, int num_relations,
          const EmbeddingTable* pretrained, Rng& rng);

  Encoder(const Encoder&) = delete;
  Encoder& operator=(const Encoder&) = delete;

  // Builds the sentence representation d (2*hidden x 1) on the tape.
  // `rng` is required when train is true and dropout > 0.
  ad::Var encode(ad::Tape& tape, const Sample& sample, bool train, Rng* rng,
                 std::vector<double>* attention_out = nullptr);

  ad::Var logits(ad::Tape& tape, ad::Var d);

  // Mean cross-entropy over the batch.
  ad::Var build_loss(ad::Tape& tape, const std::vector<const Sample*>& samples,
                     const std::vector<int>& gold, bool train, Rng* rng);

  // One optimization step; returns the batch loss before the update.
  double train_batch(const std::vector<const Sample*>& samples, const std::vector<int>& gold,
                     Optimizer& opt, Rng& rng);

  Eigen::VectorXd predict_proba(const Sample& sample);
  int predict(const Sample& sample);
  Eigen::VectorXd sentence_embedding(const Sample& sample);

  std::vector<ad::Param*> parameters();  // honors finetune_tokens
  std::vector<std::pair<std::string, ad::Param*>> named_parameters();
  std::map<std::string, ad::Mat> state() const;
  void load_state(const std::map<std::string, ad::Mat>& state);

  const EncoderConfig& config() const { return cfg_; }
  const Vocab& token_vocab() const { return tokens_; }
  const Vocab& pos_vocab() const { return pos_; }
  const Vocab& ner_vocab() const { return ner_; }
  int num_relations() const { return num_relations_; }
  int embedding_dim() const { return 2 * cfg_.hidden; }

 private:
  struct GruCell {
    ad::Param Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
    GruCell(const std::string& prefix, int in_dim, int hidden, Rng& rng);
  };
  struct GruVars {
    ad::Var Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
  };

  GruVars gru_vars(ad::Tape& tape, GruCell& cell);
  ad::Var gru_step(ad::Tape& tape, const GruVars& g, ad::Var x, ad::Var h_prev);
  ad::Var input_at(ad::Tape& tape, const Sample& sample, int t, bool train, Rng* rng);
  ad::Var dropout_mask(ad::Tape& tape, ad::Var x, bool train, Rng* rng);

  EncoderConfig cfg_;
  Vocab tokens_, pos_, ner_;
  int num_relations_ = 0;
  int input_dim_ = 0;

  ad::Param tok_emb_, pos_emb_, ner_emb_, subj_off_emb_, obj_off_emb_;
  GruCell fwd_, bwd_;
  ad::Param attn_a_, cls_W_, cls_b_;
};

}  // namespace mrefg
