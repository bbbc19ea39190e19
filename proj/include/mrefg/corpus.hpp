#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mrefg {

// Inclusive token index interval.
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool operator==(const Span&) const = default;
};

// One relation mention: a sentence with subject/object entity spans and an
// optional relation label (nullopt = unlabeled).
struct Sample {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  std::vector<std::string> ner;
  Span subj;
  Span obj;
  std::optional<std::string> relation;

  int size() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Sample&) const = default;
};

// Throws ValidationError if lengths or span bounds are inconsistent.
void validate_sample_shape(const Sample& s);

// Shape checks plus the corpus-level rule that the two entity spans must not
// overlap.
void validate_sample(const Sample& s);

class RelationVocab {
 public:
  static constexpr const char* kNoRelation = "no_relation";

  // Builds a vocabulary over the observed labels; "no_relation" is always
  // present and pinned at index 0, the rest is sorted for determinism.
  explicit RelationVocab(const std::vector<std::string>& observed);

  // Vocabulary holding only the abstain label.
  RelationVocab() : RelationVocab(std::vector<std::string>{}) {}

  int index(const std::string& label) const;  // throws on unknown label
  const std::string& label(int idx) const { return labels_.at(static_cast<size_t>(idx)); }
  int size() const { return static_cast<int>(labels_.size()); }
  int no_relation_index() const { return 0; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

struct CorpusSplit {
  std::vector<Sample> labeled;
  std::vector<Sample> unlabeled;  // relation stripped
  std::vector<Sample> dev;
  std::vector<Sample> test;

  // Gold labels of the unlabeled pool, kept out-of-band. Only the
  // augmentation-precision diagnostic may read this; the training path never
  // touches it.
  const std::unordered_map<std::string, std::string>& hidden_gold_for_diagnostics() const {
    return hidden_gold_;
  }

  std::unordered_map<std::string, std::string> hidden_gold_;
};

// Reads one JSON record per line with TACRED-style field names. Malformed
// records raise ParseError naming the line, invalid spans raise
// ValidationError naming the sample id.
std::vector<Sample> load_corpus(const std::string& path);

void save_corpus(const std::vector<Sample>& samples, const std::string& path);

// Deterministic partition of a fully labeled corpus into
// labeled/unlabeled/dev/test. |labeled| = round(labeled_frac * N),
// |unlabeled| = round(unlabeled_frac * N); the remainder is split evenly
// between dev and test. Gold labels of the unlabeled part are hidden.
CorpusSplit split_corpus(const std::vector<Sample>& samples, double labeled_frac,
                         double unlabeled_frac, uint64_t seed);

RelationVocab build_relation_vocab(const std::vector<Sample>& samples);

// Id lists per split, one section per subset, for reproducibility.
void write_split_manifest(const CorpusSplit& split, const std::string& path);

}  // namespace mrefg
