#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mrefg/corpus.hpp"

namespace mrefg {

struct RelationLexicon {
  std::string name;
  // (surface tokens, space-separated; lemma phrase) pairs, e.g. ("glorbed into", "glorb into")
  std::vector<std::pair<std::string, std::string>> verbs;
  std::vector<std::string> entities;
  std::string subj_ner;
  std::string obj_ner;
};

struct SynthSpec {
  std::vector<RelationLexicon> relations;
  int samples_per_relation = 10;
  double adjacency_prob = 0.3;  // probability that the two entity spans touch
  double noise_rate = 0.0;      // fraction of samples whose verb comes from another relation
  std::uint64_t seed = 1;

  // Invented but pronounceable lexicons, pairwise disjoint across relations.
  // With noise_rate > 0, NER type pairs repeat with period 3 so the entity
  // graph alone cannot separate every relation.
  static SynthSpec basic(int num_relations, int samples_per_relation, double adjacency_prob,
                         double noise_rate, std::uint64_t seed, int verbs_per_relation = 8,
                         int entities_per_relation = 24);
};

void validate_spec(const SynthSpec& spec);

using EdgeSet = std::set<std::pair<std::string, std::string>>;  // id pairs, first < second

struct GeneratedCorpus {
  std::vector<Sample> samples;
  // Edges implied by the construction over ALL sample pairs (no labeled-endpoint
  // restriction; builders apply that separately).
  EdgeSet entity_edges;
  EdgeSet verb_edges;
};

GeneratedCorpus generate(const SynthSpec& spec);

// Corpus as JSONL plus the declared edges as "kind\tid_i\tid_j" lines.
void write_generated(const GeneratedCorpus& corpus, const std::string& corpus_path,
                     const std::string& edges_path);

}  // namespace mrefg
