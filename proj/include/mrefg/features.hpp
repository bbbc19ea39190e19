#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>

#include <Eigen/Core>

#include "mrefg/corpus.hpp"

namespace mrefg {

// Lexical evidence the entity reference graph is built from.
struct EntitySignature {
  bool adjacent = false;                // zero tokens between the two spans (plus window)
  std::set<std::string> ner_types;      // NER tags of the two span heads
  std::set<std::string> entity_tokens;  // lowercased tokens of both spans
};

struct VerbSignature {
  std::optional<std::string> phrase;  // normalized, lowercase; nullopt = no verb in the gap
};

// Deterministic rule-based lemma normalizer: an irregular-form map plus a
// small suffix-stripping table. Not a linguistically complete lemmatizer; it
// only has to map equal verbs to equal strings.
class Lemmatizer {
 public:
  Lemmatizer();  // built-in irregular table (same content as the shipped resource)

  // Loads "surface<TAB>lemma" lines; '#' starts a comment.
  static Lemmatizer from_file(const std::string& path);

  std::string lemma(const std::string& token) const;

 private:
  std::unordered_map<std::string, std::string> irregular_;
};

const Lemmatizer& default_lemmatizer();

EntitySignature entity_signature(const Sample& s, int adjacency_window = 0);

// First maximal run of verb-POS tokens strictly between the two spans,
// extended by one immediately following particle/preposition token. All
// tokens lemma-normalized and lowercased.
VerbSignature verb_signature(const Sample& s, const Lemmatizer& lemma = default_lemmatizer());

bool is_verb_pos(const std::string& tag);
bool is_particle_pos(const std::string& tag);

// Pretrained word vectors, "token v1 ... vdim" per line. Unknown tokens look
// up as the zero vector.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  static EmbeddingTable load(const std::string& path, int dim);

  int dim() const { return dim_; }
  size_t size() const { return vectors_.size(); }
  bool contains(const std::string& token) const { return vectors_.count(token) > 0; }
  Eigen::VectorXd lookup(const std::string& token) const;

 private:
  int dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
};

}  // namespace mrefg
