#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mrefg/encoder.hpp"
#include "mrefg/util.hpp"
#include "oracles.hpp"

using namespace mrefg;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.token_dim = 4;
  cfg.tag_dim = 3;
  cfg.position_dim = 3;
  cfg.hidden = 3;
  cfg.max_offset = 2;
  cfg.dropout = 0.0;
  cfg.finetune_tokens = true;
  return cfg;
}

Encoder tiny_encoder(int num_relations, std::uint64_t seed = 7,
                     EncoderConfig cfg = tiny_config()) {
  Rng rng(seed);
  const std::set<std::string> toks = {"anna", "visited", "berlin", "fell", "into", "trap"};
  const std::set<std::string> pos = {"NNP", "VBD", "IN"};
  const std::set<std::string> ner = {"O", "PERSON"};
  return Encoder(cfg, Vocab(toks), Vocab(pos), Vocab(ner), num_relations, nullptr, rng);
}

Sample fixture_sample(const std::string& id = "f0") {
  return oracle::make_sample(id, {"anna", "fell", "into", "berlin"},
                             {"NNP", "VBD", "IN", "NNP"}, {"PERSON", "O", "O", "O"}, {0, 0},
                             {3, 3}, "rel_a");
}

void zero_classifier(Encoder& enc) {
  auto state = enc.state();
  state.at("cls_W").setZero();
  state.at("cls_b").setZero();
  enc.load_state(state);
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("vocab lookups are sorted and total") {
    Vocab v(std::set<std::string>{"b", "a", "c"});
    CHECK(v.size() == 3);
    CHECK(v.lookup("a") == 0);
    CHECK(v.lookup("c") == 2);
    CHECK(v.lookup("zz") == -1);
    CHECK(v.items() == std::vector<std::string>{"a", "b", "c"});
  }

  TEST_CASE("construction validates its configuration") {
    Rng rng(1);
    const Vocab toks(std::set<std::string>{"a"});
    const Vocab tags(std::set<std::string>{"X"});
    EncoderConfig cfg = tiny_config();
    CHECK_THROWS_AS(Encoder(cfg, toks, tags, tags, 1, nullptr, rng), ValidationError);
    cfg.dropout = 1.0;
    CHECK_THROWS_AS(Encoder(cfg, toks, tags, tags, 3, nullptr, rng), ValidationError);
    cfg = tiny_config();
    cfg.hidden = 0;
    CHECK_THROWS_AS(Encoder(cfg, toks, tags, tags, 3, nullptr, rng), ValidationError);
  }

  TEST_CASE("zeroed classifier predicts the uniform distribution") {
    Encoder enc = tiny_encoder(4);
    zero_classifier(enc);
    const Eigen::VectorXd p = enc.predict_proba(fixture_sample());
    REQUIRE(p.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25).epsilon(1e-12));
  }

  TEST_CASE("predictions always live on the simplex") {
    Encoder enc = tiny_encoder(5);
    const Eigen::VectorXd p = enc.predict_proba(fixture_sample());
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-6));
    const int arg = enc.predict(fixture_sample());
    CHECK(p[arg] == doctest::Approx(p.maxCoeff()));
  }

  TEST_CASE("uniform predictions cost ln of the class count") {
    Encoder enc = tiny_encoder(4);
    zero_classifier(enc);
    const Sample s = fixture_sample();
    ad::Tape tape;
    const ad::Var loss = enc.build_loss(tape, {&s}, {2}, false, nullptr);
    CHECK(tape.scalar(loss) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    CHECK(std::abs(tape.scalar(loss) - 1.3863) < 1e-4);
  }

  TEST_CASE("a saturated correct prediction costs nearly nothing") {
    Encoder enc = tiny_encoder(3);
    auto state = enc.state();
    state.at("cls_W").setZero();
    state.at("cls_b").setZero();
    state.at("cls_b")(1, 0) = 50.0;  // logits (0, 50, 0) regardless of the sentence
    enc.load_state(state);
    const Sample s = fixture_sample();
    ad::Tape tape;
    const ad::Var loss = enc.build_loss(tape, {&s}, {1}, false, nullptr);
    CHECK(tape.scalar(loss) < 1e-9);
  }

  TEST_CASE("batch loss equals the mean negative log-likelihood of the parts") {
    Encoder enc = tiny_encoder(3, 11);
    const Sample a = fixture_sample("a");
    Sample b = fixture_sample("b");
    b.tokens[1] = "visited";
    const std::vector<const Sample*> batch = {&a, &b};
    const std::vector<int> gold = {0, 2};

    double by_hand = 0.0;
    by_hand -= std::log(std::max(enc.predict_proba(a)[0], 1e-12));
    by_hand -= std::log(std::max(enc.predict_proba(b)[2], 1e-12));
    by_hand /= 2.0;

    ad::Tape tape;
    const double loss = tape.scalar(enc.build_loss(tape, batch, gold, false, nullptr));
    CHECK(loss == doctest::Approx(by_hand).epsilon(1e-10));
  }

  TEST_CASE("attention over a single token is exactly one") {
    Encoder enc = tiny_encoder(3);
    const Sample s =
        oracle::make_sample("one", {"anna"}, {"NNP"}, {"PERSON"}, {0, 0}, {0, 0});
    ad::Tape tape;
    std::vector<double> attention;
    enc.encode(tape, s, false, nullptr, &attention);
    REQUIRE(attention.size() == 1);
    CHECK(attention[0] == 1.0);
  }

  TEST_CASE("attention weights normalize over the sentence") {
    Encoder enc = tiny_encoder(3);
    ad::Tape tape;
    std::vector<double> attention;
    enc.encode(tape, fixture_sample(), false, nullptr, &attention);
    REQUIRE(attention.size() == 4);
    double sum = 0.0;
    for (double w : attention) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("the sentence representation ignores batch company") {
    Encoder enc = tiny_encoder(3);
    const Sample a = fixture_sample("a");
    Sample b = fixture_sample("b");
    b.tokens[0] = "trap";
    const Eigen::VectorXd alone = enc.sentence_embedding(a);
    // embed b first, then a, on a shared tape
    ad::Tape tape;
    enc.encode(tape, b, false, nullptr);
    const ad::Var da = enc.encode(tape, a, false, nullptr);
    CHECK((tape.val(da).col(0) - alone).norm() == 0.0);
    CHECK(alone.size() == enc.embedding_dim());
    CHECK(alone.allFinite());
  }

  TEST_CASE("out-of-vocabulary symbols fall back to zero channels") {
    Encoder enc = tiny_encoder(3);
    Sample s = fixture_sample();
    s.tokens[1] = "unheard";  // not in the token vocabulary
    s.pos[1] = "ZZZ";
    s.ner[1] = "WEIRD";
    CHECK_NOTHROW(enc.predict_proba(s));
    CHECK(enc.predict_proba(s).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("position offsets far beyond the clip range stay in bounds") {
    EncoderConfig cfg = tiny_config();
    cfg.max_offset = 1;
    Encoder enc = tiny_encoder(3, 7, cfg);
    std::vector<std::string> toks(9, "anna"), pos(9, "NNP"), ner(9, "O");
    const Sample s = oracle::make_sample("long", toks, pos, ner, {0, 0}, {8, 8});
    CHECK_NOTHROW(enc.predict_proba(s));
  }

  TEST_CASE("same seed, same parameters; different seed, different parameters") {
    Encoder a = tiny_encoder(3, 5), b = tiny_encoder(3, 5), c = tiny_encoder(3, 6);
    const auto sa = a.state(), sb = b.state(), sc = c.state();
    for (const auto& [name, value] : sa) {
      CHECK((value - sb.at(name)).norm() == 0.0);
    }
    CHECK((sa.at("cls_W") - sc.at("cls_W")).norm() > 0.0);
  }

  TEST_CASE("pretrained vectors seed the token embedding rows") {
    oracle::TempDir tmp("encoder-pretrained");
    const std::string path = tmp.file("vecs.txt");
    {
      std::ofstream out(path);
      out << "anna 1 2 3 4\n";
    }
    const EmbeddingTable table = EmbeddingTable::load(path, 4);
    Rng rng(3);
    const std::set<std::string> toks = {"anna", "berlin"};
    const std::set<std::string> tags = {"X"};
    Encoder enc(tiny_config(), Vocab(toks), Vocab(tags), Vocab(tags), 3, &table, rng);
    const auto state = enc.state();
    CHECK(state.at("tok_emb")(0, 0) == 1.0);  // "anna" sorts first
    CHECK(state.at("tok_emb")(0, 3) == 4.0);
    // "berlin" has no pretrained vector and keeps its random initialization
    CHECK(state.at("tok_emb").row(1).norm() > 0.0);

    EncoderConfig bad = tiny_config();
    bad.token_dim = 5;
    CHECK_THROWS_AS(Encoder(bad, Vocab(toks), Vocab(tags), Vocab(tags), 3, &table, rng),
                    ValidationError);
  }

  TEST_CASE("frozen token embeddings are excluded from the update set") {
    EncoderConfig cfg = tiny_config();
    cfg.finetune_tokens = false;
    Encoder enc = tiny_encoder(3, 7, cfg);
    for (ad::Param* p : enc.parameters()) CHECK(p->name != "tok_emb");
    cfg.finetune_tokens = true;
    Encoder tuned = tiny_encoder(3, 7, cfg);
    bool found = false;
    for (ad::Param* p : tuned.parameters()) found = found || p->name == "tok_emb";
    CHECK(found);
  }

  TEST_CASE("state round-trips through save and load") {
    Encoder a = tiny_encoder(3, 5), b = tiny_encoder(3, 9);
    const Sample s = fixture_sample();
    CHECK((a.predict_proba(s) - b.predict_proba(s)).norm() > 0.0);
    b.load_state(a.state());
    CHECK((a.predict_proba(s) - b.predict_proba(s)).norm() == 0.0);

    auto broken = a.state();
    broken.erase("attn_a");
    CHECK_THROWS_AS(b.load_state(broken), ValidationError);
    broken = a.state();
    broken.at("cls_W") = ad::Mat::Zero(1, 1);
    CHECK_THROWS_AS(b.load_state(broken), ValidationError);
  }

  TEST_CASE("dropout is used in training mode only") {
    EncoderConfig cfg = tiny_config();
    cfg.dropout = 0.5;
    Encoder enc = tiny_encoder(3, 7, cfg);
    const Sample s = fixture_sample();
    // eval mode is deterministic
    CHECK((enc.predict_proba(s) - enc.predict_proba(s)).norm() == 0.0);
    // training mode without an rng is an error
    ad::Tape tape;
    CHECK_THROWS(enc.encode(tape, s, true, nullptr));
    // training mode with an rng produces a masked (different) representation
    Rng rng(13);
    ad::Tape t2;
    const ad::Var dropped = enc.encode(t2, s, true, &rng);
    CHECK((t2.val(dropped).col(0) - enc.sentence_embedding(s)).norm() > 0.0);
  }

  TEST_CASE("a few optimizer steps reduce the training loss") {
    Encoder enc = tiny_encoder(3, 21);
    OptimizerConfig ocfg;
    ocfg.lr = 0.05;
    Optimizer opt(enc.parameters(), ocfg);
    Rng rng(4);
    const Sample a = fixture_sample("a");
    Sample b = fixture_sample("b");
    b.tokens[1] = "visited";
    const std::vector<const Sample*> batch = {&a, &b};
    const std::vector<int> gold = {0, 2};
    const double first = enc.train_batch(batch, gold, opt, rng);
    double last = first;
    for (int i = 0; i < 30; ++i) last = enc.train_batch(batch, gold, opt, rng);
    CHECK(last < first);
  }

  TEST_CASE("analytic gradients match finite differences") {
    Encoder enc = tiny_encoder(3, 17);
    const Sample a = fixture_sample("a");
    Sample b = fixture_sample("b");
    b.tokens[1] = "visited";
    b.relation = "rel_b";
    const std::vector<const Sample*> batch = {&a, &b};
    const std::vector<int> gold = {0, 2};

    auto loss = [&]() {
      ad::Tape tape;
      return tape.scalar(enc.build_loss(tape, batch, gold, false, nullptr));
    };
    auto named = enc.named_parameters();
    for (auto& [name, p] : named) p->zero_grad();
    ad::Tape tape;
    const ad::Var root = enc.build_loss(tape, batch, gold, false, nullptr);
    tape.backward(root);
    std::map<std::string, ad::Mat> analytic;
    for (auto& [name, p] : named) analytic[name] = p->grad;

    const auto res = oracle::finite_difference_check(named, analytic, loss);
    INFO("worst entry: ", res.worst);
    CHECK(res.max_rel_err < 1e-4);
  }

  TEST_CASE("bad labels and empty batches are rejected") {
    Encoder enc = tiny_encoder(3);
    const Sample s = fixture_sample();
    ad::Tape tape;
    CHECK_THROWS(enc.build_loss(tape, {}, {}, false, nullptr));
    CHECK_THROWS(enc.build_loss(tape, {&s}, {3}, false, nullptr));
    CHECK_THROWS(enc.build_loss(tape, {&s}, {-1}, false, nullptr));
    CHECK_THROWS(enc.build_loss(tape, {&s}, {0, 1}, false, nullptr));
  }
}
