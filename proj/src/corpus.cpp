#include "mrefg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mrefg/util.hpp"

namespace mrefg {

using nlohmann::json;

void validate_sample_shape(const Sample& s) {
  const auto n = s.tokens.size();
  if (n == 0) throw ValidationError("sample " + s.id + ": empty token list");
  if (s.pos.size() != n || s.ner.size() != n)
    throw ValidationError("sample " + s.id + ": pos/ner length does not match tokens");
  for (const Span& sp : {s.subj, s.obj}) {
    if (sp.start < 0 || sp.end < sp.start || sp.end >= static_cast<int>(n))
      throw ValidationError("sample " + s.id + ": span [" + std::to_string(sp.start) + "," +
                            std::to_string(sp.end) + "] out of bounds for " + std::to_string(n) +
                            " tokens");
  }
}

void validate_sample(const Sample& s) {
  validate_sample_shape(s);
  if (s.subj.start <= s.obj.end && s.obj.start <= s.subj.end)
    throw ValidationError("sample " + s.id + ": subject and object spans overlap");
}

RelationVocab::RelationVocab(const std::vector<std::string>& observed) {
  std::set<std::string> uniq(observed.begin(), observed.end());
  uniq.erase(kNoRelation);
  labels_.push_back(kNoRelation);
  labels_.insert(labels_.end(), uniq.begin(), uniq.end());
  for (size_t i = 0; i < labels_.size(); ++i) index_[labels_[i]] = static_cast<int>(i);
}

int RelationVocab::index(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw ValidationError("unknown relation label: " + label);
  return it->second;
}

namespace {

std::vector<std::string> string_list(const json& j, const char* field, int line) {
  if (!j.contains(field) || !j[field].is_array())
    throw ParseError("line " + std::to_string(line) + ": missing or non-array field '" + field +
                     "'");
  std::vector<std::string> out;
  out.reserve(j[field].size());
  for (const auto& v : j[field]) {
    if (!v.is_string())
      throw ParseError("line " + std::to_string(line) + ": non-string entry in '" + field + "'");
    out.push_back(v.get<std::string>());
  }
  return out;
}

int int_field(const json& j, const char* field, int line) {
  if (!j.contains(field) || !j[field].is_number_integer())
    throw ParseError("line " + std::to_string(line) + ": missing or non-integer field '" + field +
                     "'");
  return j[field].get<int>();
}

}  // namespace

std::vector<Sample> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);

  std::vector<Sample> samples;
  std::set<std::string> seen_ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    Sample s;
    s.id = j.value("id", "line" + std::to_string(lineno));
    // TACRED ships the sentence under "token"; accept both spellings.
    s.tokens = string_list(j, j.contains("tokens") ? "tokens" : "token", lineno);
    const size_t n = s.tokens.size();
    if (j.contains("stanford_pos"))
      s.pos = string_list(j, "stanford_pos", lineno);
    else
      s.pos.assign(n, "X");
    if (j.contains("stanford_ner"))
      s.ner = string_list(j, "stanford_ner", lineno);
    else
      s.ner.assign(n, "O");
    s.subj = {int_field(j, "subj_start", lineno), int_field(j, "subj_end", lineno)};
    s.obj = {int_field(j, "obj_start", lineno), int_field(j, "obj_end", lineno)};
    if (j.contains("relation") && !j["relation"].is_null())
      s.relation = j["relation"].get<std::string>();
    validate_sample(s);
    if (!seen_ids.insert(s.id).second)
      throw ValidationError("sample " + s.id + ": duplicate id (line " + std::to_string(lineno) +
                            ")");
    samples.push_back(std::move(s));
  }
  return samples;
}

void save_corpus(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const Sample& s : samples) {
    json j;
    j["id"] = s.id;
    j["tokens"] = s.tokens;
    j["stanford_pos"] = s.pos;
    j["stanford_ner"] = s.ner;
    j["subj_start"] = s.subj.start;
    j["subj_end"] = s.subj.end;
    j["obj_start"] = s.obj.start;
    j["obj_end"] = s.obj.end;
    if (s.relation)
      j["relation"] = *s.relation;
    else
      j["relation"] = nullptr;
    out << j.dump() << "\n";
  }
}

CorpusSplit split_corpus(const std::vector<Sample>& samples, double labeled_frac,
                         double unlabeled_frac, uint64_t seed) {
  if (labeled_frac < 0.0 || labeled_frac > 1.0 || unlabeled_frac < 0.0 || unlabeled_frac > 1.0)
    throw std::invalid_argument("split fractions must lie in [0,1]");
  if (labeled_frac + unlabeled_frac > 1.0 + 1e-12)
    throw std::invalid_argument("labeled_frac + unlabeled_frac must not exceed 1");
  for (const Sample& s : samples)
    if (!s.relation)
      throw ValidationError("split_corpus requires a fully labeled corpus; sample " + s.id +
                            " has no relation");

  const size_t n = samples.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto n_labeled = static_cast<size_t>(std::llround(labeled_frac * static_cast<double>(n)));
  const auto n_unlabeled =
      static_cast<size_t>(std::llround(unlabeled_frac * static_cast<double>(n)));
  const size_t rest = n - std::min(n, n_labeled + n_unlabeled);
  const size_t n_dev = rest / 2;

  CorpusSplit split;
  for (size_t i = 0; i < n; ++i) {
    const Sample& s = samples[order[i]];
    if (i < n_labeled) {
      split.labeled.push_back(s);
    } else if (i < n_labeled + n_unlabeled) {
      Sample hidden = s;
      split.hidden_gold_[s.id] = *s.relation;
      hidden.relation.reset();
      split.unlabeled.push_back(std::move(hidden));
    } else if (i < n_labeled + n_unlabeled + n_dev) {
      split.dev.push_back(s);
    } else {
      split.test.push_back(s);
    }
  }
  return split;
}

RelationVocab build_relation_vocab(const std::vector<Sample>& samples) {
  std::vector<std::string> observed;
  for (const Sample& s : samples)
    if (s.relation) observed.push_back(*s.relation);
  return RelationVocab(observed);
}

void write_split_manifest(const CorpusSplit& split, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split manifest: " + path);
  auto section = [&](const char* name, const std::vector<Sample>& part) {
    for (const Sample& s : part) out << name << "\t" << s.id << "\n";
  };
  section("labeled", split.labeled);
  section("unlabeled", split.unlabeled);
  section("dev", split.dev);
  section("test", split.test);
}

}  // namespace mrefg
