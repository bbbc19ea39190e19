#include "mrefg/features.hpp"

#include <fstream>
#include <sstream>

#include "mrefg/util.hpp"

namespace mrefg {

namespace {

// Mirror of resources/irregular_verbs.tsv (version 1); keeps the library
// usable without a resource path. A unit test asserts the two stay in sync.
constexpr const char* kIrregularVerbs = R"(
arose	arise
ate	eat
bore	bear
became	become
began	begin
bent	bend
bound	bind
bit	bite
blew	blow
broke	break
brought	bring
built	build
bought	buy
caught	catch
chose	choose
came	come
cost	cost
cut	cut
dealt	deal
did	do
done	do
drew	draw
drank	drink
drove	drive
fell	fall
fed	feed
felt	feel
fought	fight
flew	fly
forgot	forget
found	find
gave	give
went	go
gone	go
grew	grow
had	have
has	have
heard	hear
held	hold
hit	hit
kept	keep
knew	know
laid	lay
led	lead
left	leave
lent	lend
let	let
lost	lose
made	make
meant	mean
met	meet
moved	move
paid	pay
placed	place
put	put
ran	run
read	read
rode	ride
rose	rise
said	say
saw	see
seen	see
sold	sell
sent	send
set	set
shook	shake
shut	shut
sang	sing
sat	sit
slept	sleep
spoke	speak
spent	spend
stood	stand
stole	steal
struck	strike
swam	swim
took	take
taken	take
taught	teach
told	tell
thought	think
threw	throw
understood	understand
used	use
was	be
were	be
is	be
are	be
wore	wear
won	win
wrote	write
)";

std::unordered_map<std::string, std::string> parse_irregular(std::istream& in,
                                                             const std::string& source) {
  std::unordered_map<std::string, std::string> map;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string::npos)
      throw ParseError(source + " line " + std::to_string(lineno) + ": expected surface<TAB>lemma");
    map[to_lower(trim(t.substr(0, tab)))] = to_lower(trim(t.substr(tab + 1)));
  }
  return map;
}

}  // namespace

Lemmatizer::Lemmatizer() {
  std::istringstream in(kIrregularVerbs);
  irregular_ = parse_irregular(in, "<builtin>");
}

Lemmatizer Lemmatizer::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open irregular-verb map: " + path);
  Lemmatizer l;
  l.irregular_ = parse_irregular(in, path);
  return l;
}

std::string Lemmatizer::lemma(const std::string& token) const {
  std::string w = to_lower(token);
  if (auto it = irregular_.find(w); it != irregular_.end()) return it->second;
  const size_t n = w.size();
  // suffix table: -ies/-ied -> -y, -ed, -ing, -s; undouble a trailing
  // consonant pair left over from -ed/-ing stripping
  auto ends = [&](const char* suf) {
    const size_t m = std::string_view(suf).size();
    return n > m && w.compare(n - m, m, suf) == 0;
  };
  auto undouble = [](std::string s) {
    const size_t m = s.size();
    if (m >= 3 && s[m - 1] == s[m - 2] && std::string("aeiou").find(s[m - 1]) == std::string::npos)
      s.pop_back();
    return s;
  };
  if (ends("ies") && n > 4) return w.substr(0, n - 3) + "y";
  if (ends("ied") && n > 4) return w.substr(0, n - 3) + "y";
  if (ends("ing") && n > 5) return undouble(w.substr(0, n - 3));
  if (ends("ed") && n > 4) return undouble(w.substr(0, n - 2));
  if (ends("s") && !ends("ss") && n > 3) return w.substr(0, n - 1);
  return w;
}

const Lemmatizer& default_lemmatizer() {
  static const Lemmatizer instance;
  return instance;
}

bool is_verb_pos(const std::string& tag) {
  return !tag.empty() && tag[0] == 'V';  // Penn VB* and UPOS VERB; excludes AUX/MD
}

bool is_particle_pos(const std::string& tag) {
  return tag == "IN" || tag == "TO" || tag == "RP" || tag == "PART" || tag == "ADP";
}

namespace {

// Gap strictly between the two spans, as [first, last] token indices; empty
// when the spans are adjacent.
std::pair<int, int> inter_entity_gap(const Sample& s) {
  const Span& left = s.subj.start <= s.obj.start ? s.subj : s.obj;
  const Span& right = s.subj.start <= s.obj.start ? s.obj : s.subj;
  return {left.end + 1, right.start - 1};
}

}  // namespace

EntitySignature entity_signature(const Sample& s, int adjacency_window) {
  EntitySignature sig;
  const auto [lo, hi] = inter_entity_gap(s);
  sig.adjacent = (hi - lo + 1) <= adjacency_window;
  // span head = last token (English right-headedness)
  sig.ner_types.insert(s.ner[static_cast<size_t>(s.subj.end)]);
  sig.ner_types.insert(s.ner[static_cast<size_t>(s.obj.end)]);
  for (const Span& sp : {s.subj, s.obj})
    for (int i = sp.start; i <= sp.end; ++i)
      sig.entity_tokens.insert(to_lower(s.tokens[static_cast<size_t>(i)]));
  return sig;
}

VerbSignature verb_signature(const Sample& s, const Lemmatizer& lemma) {
  const auto [lo, hi] = inter_entity_gap(s);
  int run_start = -1;
  for (int i = lo; i <= hi; ++i) {
    if (is_verb_pos(s.pos[static_cast<size_t>(i)])) {
      run_start = i;
      break;
    }
  }
  if (run_start < 0) return {};

  int run_end = run_start;
  while (run_end + 1 <= hi && is_verb_pos(s.pos[static_cast<size_t>(run_end + 1)])) ++run_end;

  std::string phrase;
  for (int i = run_start; i <= run_end; ++i) {
    if (!phrase.empty()) phrase += ' ';
    phrase += lemma.lemma(s.tokens[static_cast<size_t>(i)]);
  }
  if (run_end + 1 <= hi && is_particle_pos(s.pos[static_cast<size_t>(run_end + 1)]))
    phrase += ' ' + to_lower(s.tokens[static_cast<size_t>(run_end + 1)]);
  return {phrase};
}

EmbeddingTable EmbeddingTable::load(const std::string& path, int dim) {
  if (dim <= 0) throw std::invalid_argument("embedding dim must be positive");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  EmbeddingTable table;
  table.dim_ = dim;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    Eigen::VectorXd v(dim);
    int k = 0;
    double x;
    while (ls >> x) {
      if (k >= dim)
        throw ParseError("embedding line " + std::to_string(lineno) + ": more than " +
                         std::to_string(dim) + " components");
      v[k++] = x;
    }
    if (k != dim)
      throw ParseError("embedding line " + std::to_string(lineno) + ": expected " +
                       std::to_string(dim) + " components, got " + std::to_string(k));
    table.vectors_[token] = std::move(v);
  }
  return table;
}

Eigen::VectorXd EmbeddingTable::lookup(const std::string& token) const {
  if (auto it = vectors_.find(token); it != vectors_.end()) return it->second;
  return Eigen::VectorXd::Zero(dim_);
}

}  // namespace mrefg
