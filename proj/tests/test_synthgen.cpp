#include <doctest.h>

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "mrefg/corpus.hpp"
#include "mrefg/features.hpp"
#include "mrefg/refgraph.hpp"
#include "mrefg/synthgen.hpp"
#include "mrefg/util.hpp"
#include "oracles.hpp"

using namespace mrefg;

TEST_SUITE("synthgen") {
  TEST_CASE("generation is deterministic in the seed") {
    const SynthSpec spec = SynthSpec::basic(3, 15, 0.5, 0.1, 77);
    const GeneratedCorpus a = generate(spec);
    const GeneratedCorpus b = generate(spec);
    CHECK(a.samples == b.samples);
    CHECK(a.entity_edges == b.entity_edges);
    CHECK(a.verb_edges == b.verb_edges);

    SynthSpec other = spec;
    other.seed = 78;
    const GeneratedCorpus c = generate(other);
    CHECK(a.samples != c.samples);
  }

  TEST_CASE("spec validation rejects inconsistent requests") {
    CHECK_THROWS_AS(validate_spec(SynthSpec{}), ValidationError);

    SynthSpec spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    CHECK_NOTHROW(validate_spec(spec));

    spec.samples_per_relation = 0;
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);
    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.adjacency_prob = 1.5;
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);
    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.noise_rate = -0.1;
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);

    // verb noise is meaningless with a single relation
    spec = SynthSpec::basic(1, 5, 0.5, 0.0, 1);
    spec.noise_rate = 0.2;
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);

    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.relations[1].name = spec.relations[0].name;
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);
    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.relations[0].verbs.clear();
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);
    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.relations[0].entities.clear();
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);
    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.relations[0].subj_ner.clear();
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);

    // without noise, lexicons must stay pairwise disjoint
    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.relations[1].verbs[0] = spec.relations[0].verbs[0];
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);
    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.relations[1].entities[0] = spec.relations[0].entities[0];
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);
    spec = SynthSpec::basic(2, 5, 0.5, 0.0, 1);
    spec.relations[1].subj_ner = spec.relations[0].subj_ner;
    spec.relations[1].obj_ner = spec.relations[0].obj_ner;
    CHECK_THROWS_AS(validate_spec(spec), ValidationError);

    // the invented-stem inventory is finite
    CHECK_THROWS_AS(SynthSpec::basic(60, 5, 0.5, 0.0, 1), ValidationError);
  }

  TEST_CASE("generated corpora are well-formed and fully labeled") {
    const SynthSpec spec = SynthSpec::basic(4, 12, 0.4, 0.1, 5);
    const GeneratedCorpus corpus = generate(spec);
    REQUIRE(corpus.samples.size() == 48);

    std::set<std::string> ids;
    std::map<std::string, int> label_counts;
    for (const Sample& s : corpus.samples) {
      CHECK(ids.insert(s.id).second);
      CHECK_NOTHROW(validate_sample(s));
      REQUIRE(s.relation.has_value());
      ++label_counts[*s.relation];
      // the id carries its relation name as a prefix
      CHECK(s.id.rfind(*s.relation + "_", 0) == 0);
    }
    REQUIRE(label_counts.size() == 4);
    for (const auto& [name, count] : label_counts) CHECK(count == 12);
  }

  TEST_CASE("adjacency probability extremes pin the sentence layout") {
    const GeneratedCorpus touching = generate(SynthSpec::basic(2, 20, 1.0, 0.0, 9));
    for (const Sample& s : touching.samples) {
      CHECK(entity_signature(s).adjacent);
    }
    const GeneratedCorpus separated = generate(SynthSpec::basic(2, 20, 0.0, 0.0, 9));
    for (const Sample& s : separated.samples) {
      CHECK_FALSE(entity_signature(s).adjacent);
      // every separated sample exposes a verb phrase between the entities
      CHECK(verb_signature(s).phrase.has_value());
    }
    // with everything adjacent there is nothing for the verb graph to match
    CHECK(touching.verb_edges.empty());
  }

  TEST_CASE("declared edges match brute force and the graph builders") {
    for (std::uint64_t seed : {31ull, 32ull, 33ull}) {
      const GeneratedCorpus corpus = generate(SynthSpec::basic(3, 20, 0.5, 0.1, seed));

      std::map<std::string, Sample> by_id;
      std::vector<std::string> all_ids;
      for (const Sample& s : corpus.samples) {
        by_id[s.id] = s;
        all_ids.push_back(s.id);
      }
      const std::set<std::string> all_labeled(all_ids.begin(), all_ids.end());

      // independent re-derivation from the raw token sequences
      CHECK(oracle::entity_edges_bruteforce(by_id, all_labeled, 0) == corpus.entity_edges);
      CHECK(oracle::verb_edges_bruteforce(by_id, all_labeled, default_lemmatizer()) ==
            corpus.verb_edges);

      // the production builders agree once every sample counts as labeled
      EntitySignatureMap ent_sigs;
      VerbSignatureMap verb_sigs;
      for (const Sample& s : corpus.samples) {
        ent_sigs[s.id] = entity_signature(s);
        verb_sigs[s.id] = verb_signature(s);
      }
      const ReferenceGraph entity = build_entity_graph(all_ids, {}, ent_sigs);
      const ReferenceGraph verb = build_verb_graph(all_ids, {}, verb_sigs);
      CHECK(oracle::edge_pairs(entity) == corpus.entity_edges);
      CHECK(oracle::edge_pairs(verb) == corpus.verb_edges);
    }
  }

  TEST_CASE("verb noise makes entity types ambiguous across relations") {
    // with noise, relations 0 and 3 share their NER type pair...
    const SynthSpec noisy = SynthSpec::basic(6, 3, 0.5, 0.1, 2);
    CHECK(noisy.relations[0].subj_ner == noisy.relations[3].subj_ner);
    CHECK(noisy.relations[0].obj_ner == noisy.relations[3].obj_ner);
    CHECK(noisy.relations[1].subj_ner == noisy.relations[4].subj_ner);
    CHECK(noisy.relations[0].subj_ner != noisy.relations[1].subj_ner);
    // ...while a clean spec keeps every pair unique
    const SynthSpec clean = SynthSpec::basic(6, 3, 0.5, 0.0, 2);
    std::set<std::string> pairs;
    for (const RelationLexicon& lex : clean.relations) {
      CHECK(pairs.insert(lex.subj_ner + "|" + lex.obj_ner).second);
    }
  }

  TEST_CASE("noise borrows verb phrases from other relations") {
    const SynthSpec spec = SynthSpec::basic(3, 60, 0.0, 0.3, 13);
    std::set<std::string> own_lemmas;
    for (const auto& [surface, lemma] : spec.relations[0].verbs) own_lemmas.insert(lemma);
    const GeneratedCorpus corpus = generate(spec);
    int borrowed = 0, total = 0;
    for (const Sample& s : corpus.samples) {
      if (*s.relation != spec.relations[0].name) continue;
      ++total;
      const auto phrase = verb_signature(s).phrase;
      REQUIRE(phrase.has_value());
      if (own_lemmas.count(*phrase) == 0) ++borrowed;
    }
    CHECK(total == 60);
    CHECK(borrowed > 0);         // some verbs leaked in from other relations
    CHECK(borrowed < total / 2); // but the majority stays on-lexicon
  }

  TEST_CASE("written corpora and edge lists read back intact") {
    const GeneratedCorpus corpus = generate(SynthSpec::basic(2, 10, 0.5, 0.0, 4));
    oracle::TempDir dir("synth");
    const std::string corpus_path = dir.file("synth.jsonl");
    const std::string edges_path = dir.file("edges.tsv");
    write_generated(corpus, corpus_path, edges_path);

    const std::vector<Sample> loaded = load_corpus(corpus_path);
    REQUIRE(loaded.size() == corpus.samples.size());
    CHECK(loaded == corpus.samples);

    EdgeSet entity, verb;
    std::ifstream in(edges_path);
    std::string line;
    while (std::getline(in, line)) {
      const auto parts = split(line, '\t');
      REQUIRE(parts.size() == 3);
      CHECK(parts[1] < parts[2]);
      if (parts[0] == "entity") {
        CHECK(entity.emplace(parts[1], parts[2]).second);
      } else {
        REQUIRE(parts[0] == "verb");
        CHECK(verb.emplace(parts[1], parts[2]).second);
      }
    }
    CHECK(entity == corpus.entity_edges);
    CHECK(verb == corpus.verb_edges);
  }
}
