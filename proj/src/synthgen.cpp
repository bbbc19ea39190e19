#include "mrefg/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "mrefg/util.hpp"

namespace mrefg {

namespace {

// Deterministic stream of unique pronounceable stems ("blask", "cremp", ...).
class StemStream {
 public:
  std::string next() {
    static const std::vector<std::string> onsets = {"bl", "br", "cl", "cr", "dr", "fl", "gl",
                                                    "gr", "pl", "pr", "sl", "sm", "sn", "sp",
                                                    "st", "tr", "ch", "sh", "th", "wh"};
    static const std::vector<std::string> vowels = {"a", "e", "i", "o", "u"};
    static const std::vector<std::string> codas = {"b",  "d",  "g",  "k",  "l",  "m", "n",
                                                   "p",  "rk", "rn", "sk", "st", "t"};
    size_t i = counter_++;
    size_t coda = i % codas.size();
    i /= codas.size();
    size_t vowel = i % vowels.size();
    i /= vowels.size();
    if (i >= onsets.size()) throw ValidationError("lexicon request exceeds the stem inventory");
    return onsets[i] + vowels[vowel] + codas[coda];
  }

 private:
  size_t counter_ = 0;
};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

struct Bookkeeping {
  bool adjacent = false;
  std::set<std::string> types;
  std::set<std::string> tokens;  // lowercased entity-span tokens
  std::string phrase;            // lemma phrase; empty = no verb between the entities
};

void push_token(Sample& s, const std::string& tok, const std::string& pos,
                const std::string& ner) {
  s.tokens.push_back(tok);
  s.pos.push_back(pos);
  s.ner.push_back(ner);
}

}  // namespace

SynthSpec SynthSpec::basic(int num_relations, int samples_per_relation, double adjacency_prob,
                           double noise_rate, std::uint64_t seed, int verbs_per_relation,
                           int entities_per_relation) {
  if (num_relations < 1) throw ValidationError("need at least one relation");
  if (verbs_per_relation < 1 || entities_per_relation < 1) {
    throw ValidationError("lexicon sizes must be positive");
  }
  static const std::vector<std::string> particles = {"into", "onto", "over", "around"};
  StemStream stems;
  SynthSpec spec;
  spec.samples_per_relation = samples_per_relation;
  spec.adjacency_prob = adjacency_prob;
  spec.noise_rate = noise_rate;
  spec.seed = seed;
  size_t particle_at = 0;
  for (int r = 0; r < num_relations; ++r) {
    RelationLexicon lex;
    lex.name = "rel" + std::to_string(r);
    for (int k = 0; k < verbs_per_relation; ++k) {
      std::string stem = stems.next();
      if (k % 2 == 1) {
        const std::string& part = particles[particle_at++ % particles.size()];
        lex.verbs.emplace_back(stem + "ed " + part, stem + " " + part);
      } else {
        lex.verbs.emplace_back(stem + "ed", stem);
      }
    }
    for (int k = 0; k < entities_per_relation; ++k) {
      lex.entities.push_back(capitalize(stems.next()));
    }
    int type_group = noise_rate > 0.0 ? r % 3 : r;
    lex.subj_ner = "TYPEA" + std::to_string(type_group);
    lex.obj_ner = "TYPEB" + std::to_string(type_group);
    spec.relations.push_back(std::move(lex));
  }
  return spec;
}

void validate_spec(const SynthSpec& spec) {
  if (spec.relations.empty()) throw ValidationError("spec has no relations");
  if (spec.samples_per_relation < 1) {
    throw ValidationError("samples_per_relation must be positive");
  }
  if (spec.adjacency_prob < 0.0 || spec.adjacency_prob > 1.0) {
    throw ValidationError("adjacency_prob must lie in [0, 1]");
  }
  if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0) {
    throw ValidationError("noise_rate must lie in [0, 1]");
  }
  if (spec.noise_rate > 0.0 && spec.relations.size() < 2) {
    throw ValidationError("verb noise needs at least two relations to swap between");
  }
  std::set<std::string> names;
  for (const RelationLexicon& lex : spec.relations) {
    if (lex.name.empty()) throw ValidationError("relation name must not be empty");
    if (!names.insert(lex.name).second) {
      throw ValidationError("duplicate relation name " + lex.name);
    }
    if (lex.verbs.empty()) throw ValidationError(lex.name + ": verb lexicon is empty");
    if (lex.entities.empty()) throw ValidationError(lex.name + ": entity lexicon is empty");
    if (lex.subj_ner.empty() || lex.obj_ner.empty()) {
      throw ValidationError(lex.name + ": NER types must not be empty");
    }
  }
  if (spec.noise_rate == 0.0) {
    std::set<std::string> verbs, entities, types;
    for (const RelationLexicon& lex : spec.relations) {
      for (const auto& [surface, lemma] : lex.verbs) {
        if (!verbs.insert(surface).second || !verbs.insert(lemma).second) {
          throw ValidationError("verb lexicons overlap across relations (" + surface + ")");
        }
      }
      for (const std::string& e : lex.entities) {
        if (!entities.insert(to_lower(e)).second) {
          throw ValidationError("entity lexicons overlap across relations (" + e + ")");
        }
      }
      std::string pair = lex.subj_ner + "|" + lex.obj_ner;
      if (!types.insert(pair).second) {
        throw ValidationError("NER type pairs overlap across relations (" + pair + ")");
      }
    }
  }
}

GeneratedCorpus generate(const SynthSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);
  GeneratedCorpus out;
  std::vector<Bookkeeping> books;

  for (size_t r = 0; r < spec.relations.size(); ++r) {
    const RelationLexicon& lex = spec.relations[r];
    for (int k = 0; k < spec.samples_per_relation; ++k) {
      char idbuf[64];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%03d", lex.name.c_str(), k);

      bool adjacent = rng.uniform() < spec.adjacency_prob;
      auto draw_span = [&]() {
        std::vector<std::string> toks;
        toks.push_back(lex.entities[rng.below(lex.entities.size())]);
        if (rng.uniform() < 0.25) toks.push_back(lex.entities[rng.below(lex.entities.size())]);
        return toks;
      };
      std::vector<std::string> subj = draw_span();
      std::vector<std::string> obj = draw_span();

      size_t verb_rel = r;
      if (spec.noise_rate > 0.0 && rng.uniform() < spec.noise_rate) {
        verb_rel = rng.below(spec.relations.size() - 1);
        if (verb_rel >= r) ++verb_rel;
      }
      const auto& verb_lex = spec.relations[verb_rel].verbs;
      const auto& [surface, lemma] = verb_lex[rng.below(verb_lex.size())];
      std::vector<std::string> verb_toks = split(surface, ' ');
      bool leading_filler = rng.uniform() < 0.3;

      Sample s;
      s.id = idbuf;
      s.relation = lex.name;
      if (leading_filler) push_token(s, "meanwhile", "RB", "O");
      push_token(s, "the", "DT", "O");
      s.subj.start = static_cast<int>(s.tokens.size());
      for (const std::string& t : subj) push_token(s, t, "NN", lex.subj_ner);
      s.subj.end = static_cast<int>(s.tokens.size()) - 1;
      auto push_verb = [&]() {
        for (size_t vi = 0; vi < verb_toks.size(); ++vi) {
          push_token(s, verb_toks[vi], vi == 0 ? "VBD" : "IN", "O");
        }
      };
      if (adjacent) {
        s.obj.start = static_cast<int>(s.tokens.size());
        for (const std::string& t : obj) push_token(s, t, "NN", lex.obj_ner);
        s.obj.end = static_cast<int>(s.tokens.size()) - 1;
        push_verb();
      } else {
        push_verb();
        push_token(s, "the", "DT", "O");
        s.obj.start = static_cast<int>(s.tokens.size());
        for (const std::string& t : obj) push_token(s, t, "NN", lex.obj_ner);
        s.obj.end = static_cast<int>(s.tokens.size()) - 1;
      }
      push_token(s, ".", ".", "O");
      validate_sample(s);

      Bookkeeping book;
      book.adjacent = adjacent;
      book.types = {lex.subj_ner, lex.obj_ner};
      for (const std::string& t : subj) book.tokens.insert(to_lower(t));
      for (const std::string& t : obj) book.tokens.insert(to_lower(t));
      if (!adjacent) book.phrase = lemma;

      out.samples.push_back(std::move(s));
      books.push_back(std::move(book));
    }
  }

  for (size_t i = 0; i < books.size(); ++i) {
    for (size_t j = i + 1; j < books.size(); ++j) {
      auto key = std::make_pair(std::min(out.samples[i].id, out.samples[j].id),
                                std::max(out.samples[i].id, out.samples[j].id));
      const Bookkeeping& a = books[i];
      const Bookkeeping& b = books[j];
      if (a.adjacent && b.adjacent) {
        bool same_types = a.types == b.types;
        bool overlap = std::any_of(a.tokens.begin(), a.tokens.end(), [&](const std::string& t) {
          return b.tokens.count(t) > 0;
        });
        if (same_types || overlap) out.entity_edges.insert(key);
      }
      if (!a.phrase.empty() && a.phrase == b.phrase) out.verb_edges.insert(key);
    }
  }
  return out;
}

void write_generated(const GeneratedCorpus& corpus, const std::string& corpus_path,
                     const std::string& edges_path) {
  save_corpus(corpus.samples, corpus_path);
  std::ofstream out(edges_path);
  if (!out) throw IoError("cannot write edge list " + edges_path);
  for (const auto& [a, b] : corpus.entity_edges) out << "entity\t" << a << "\t" << b << "\n";
  for (const auto& [a, b] : corpus.verb_edges) out << "verb\t" << a << "\t" << b << "\n";
  if (!out) throw IoError("failed while writing edge list " + edges_path);
}

}  // namespace mrefg
