#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mrefg/mgat.hpp"
#include "mrefg/util.hpp"
#include "oracles.hpp"

using namespace mrefg;

namespace {

MgatConfig tiny_config(int heads = 2, int dim = 8, int fusion = 4) {
  MgatConfig cfg;
  cfg.heads = heads;
  cfg.dim = dim;
  cfg.fusion_dim = fusion;
  return cfg;
}

std::vector<std::string> node_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("n" + std::to_string(100 + i));
  return out;
}

std::vector<Eigen::VectorXd> random_inputs(int n, int dim, Rng& rng) {
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v(dim);
    for (int k = 0; k < dim; ++k) v[k] = rng.normal() * 0.5;
    out.push_back(v);
  }
  return out;
}

std::vector<ad::Var> to_vars(ad::Tape& tape, const std::vector<Eigen::VectorXd>& d) {
  std::vector<ad::Var> out;
  for (const auto& v : d) out.push_back(tape.constant(v));
  return out;
}

ReferenceGraph path_graph(const std::vector<std::string>& ids) {
  ReferenceGraph g(GraphKind::semantics);
  for (size_t i = 0; i + 1 < ids.size(); ++i) g.add_edge(ids[i], ids[i + 1]);
  return g;
}

}  // namespace

TEST_SUITE("mgat") {
  TEST_CASE("configuration is validated") {
    Rng rng(1);
    CHECK_THROWS_AS(Mgat(tiny_config(3, 8), 4, 3, rng), ValidationError);  // 8 % 3 != 0
    CHECK_THROWS_AS(Mgat(tiny_config(0, 8), 4, 3, rng), ValidationError);
    CHECK_THROWS_AS(Mgat(tiny_config(), 0, 3, rng), ValidationError);
    CHECK_THROWS_AS(Mgat(tiny_config(), 4, 1, rng), ValidationError);
    CHECK_NOTHROW(Mgat(tiny_config(), 4, 3, rng));
  }

  TEST_CASE("node attention matches a dense index-by-index recomputation") {
    Rng rng(5);
    Mgat m(tiny_config(2, 8, 4), 6, 3, rng);
    const auto ids = node_names(5);
    const auto inputs = random_inputs(5, 6, rng);
    const ReferenceGraph g = path_graph(ids);

    ad::Tape tape;
    const auto z = m.node_attention(tape, ids, to_vars(tape, inputs), g);
    const auto model = oracle::read_attention_params(m);
    const auto want = oracle::dense_node_attention(model, ids, inputs, g);

    REQUIRE(z.size() == want.size());
    for (size_t i = 0; i < z.size(); ++i) {
      const Eigen::VectorXd got = tape.val(z[i]).col(0);
      REQUIRE(got.size() == want[i].size());
      CHECK((got - want[i]).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("attention weights normalize per node and per head") {
    Rng rng(7);
    Mgat m(tiny_config(4, 8, 4), 5, 3, rng);
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 20 + static_cast<int>(rng.below(80));
      const auto ids = node_names(n);
      const auto inputs = random_inputs(n, 5, rng);
      const ReferenceGraph g =
          oracle::random_graph(GraphKind::entity, ids, 3.0 / static_cast<double>(n), rng);

      ad::Tape tape;
      AttentionDiag diag;
      m.node_attention(tape, ids, to_vars(tape, inputs), g, &diag);
      REQUIRE(diag.alpha.size() == static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        REQUIRE(diag.alpha[static_cast<size_t>(i)].size() == 4);
        for (int k = 0; k < 4; ++k) {
          const auto& weights = diag.alpha[static_cast<size_t>(i)][static_cast<size_t>(k)];
          CHECK(weights.size() == static_cast<size_t>(g.degree(ids[static_cast<size_t>(i)]) + 1));
          double sum = 0.0;
          for (const auto& [j, w] : weights) {
            CHECK(w >= 0.0);
            sum += w;
          }
          CHECK(std::abs(sum - 1.0) < 1e-6);
        }
      }
    }
  }

  TEST_CASE("an isolated node attends only to itself") {
    Rng rng(3);
    Mgat m(tiny_config(2, 8, 4), 4, 3, rng);
    const auto ids = node_names(3);
    ReferenceGraph g(GraphKind::verb);
    g.add_edge(ids[0], ids[1]);  // ids[2] stays isolated

    ad::Tape tape;
    AttentionDiag diag;
    m.node_attention(tape, ids, to_vars(tape, random_inputs(3, 4, rng)), g, &diag);
    const auto& self_only = diag.alpha[2][0];
    REQUIRE(self_only.size() == 1);
    CHECK(self_only[0].first == 2);
    CHECK(self_only[0].second == 1.0);
  }

  TEST_CASE("graph weights normalize and a single graph gets weight one") {
    Rng rng(11);
    Mgat m(tiny_config(2, 8, 4), 4, 3, rng);
    const auto ids = node_names(6);
    const auto inputs = random_inputs(6, 4, rng);

    ReferenceGraph a = path_graph(ids);
    ReferenceGraph b = oracle::random_graph(GraphKind::entity, ids, 0.4, rng);
    ReferenceGraph c = oracle::random_graph(GraphKind::verb, ids, 0.2, rng);

    ad::Tape tape;
    const auto fwd3 = m.forward(tape, ids, to_vars(tape, inputs), {&a, &b, &c});
    REQUIRE(fwd3.beta.size() == 3);
    double sum = 0.0;
    for (double w : fwd3.beta) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-10);

    ad::Tape t1;
    const auto fwd1 = m.forward(t1, ids, to_vars(t1, inputs), {&a});
    REQUIRE(fwd1.beta.size() == 1);
    CHECK(fwd1.beta[0] == 1.0);
  }

  TEST_CASE("graph weights are shared across nodes") {
    // the fused vector must be the same convex combination for every node
    Rng rng(13);
    Mgat m(tiny_config(2, 8, 4), 4, 3, rng);
    const auto ids = node_names(4);
    const auto inputs = random_inputs(4, 4, rng);
    ReferenceGraph a = path_graph(ids);
    ReferenceGraph b(GraphKind::verb);
    b.add_edge(ids[0], ids[3]);

    ad::Tape tape;
    const auto za = m.node_attention(tape, ids, to_vars(tape, inputs), a);
    const auto zb = m.node_attention(tape, ids, to_vars(tape, inputs), b);
    const auto fusion = m.graph_attention(tape, {za, zb});
    const Eigen::VectorXd beta = tape.val(fusion.beta).col(0);
    REQUIRE(beta.size() == 2);
    for (size_t i = 0; i < ids.size(); ++i) {
      const Eigen::VectorXd want =
          beta[0] * tape.val(za[i]).col(0) + beta[1] * tape.val(zb[i]).col(0);
      CHECK((tape.val(fusion.z[i]).col(0) - want).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("forward produces simplex distributions per node") {
    Rng rng(17);
    Mgat m(tiny_config(2, 8, 4), 4, 5, rng);
    const auto ids = node_names(7);
    ReferenceGraph g = oracle::random_graph(GraphKind::entity, ids, 0.3, rng);
    ad::Tape tape;
    const auto fwd = m.forward(tape, ids, to_vars(tape, random_inputs(7, 4, rng)), {&g});
    REQUIRE(fwd.probs.size() == 7);
    for (const ad::Var& p : fwd.probs) {
      const Eigen::VectorXd v = tape.val(p).col(0);
      REQUIRE(v.size() == 5);
      CHECK(v.minCoeff() >= 0.0);
      CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("zeroed classifier yields the uniform distribution and ln|R| loss") {
    Rng rng(19);
    Mgat m(tiny_config(2, 8, 4), 4, 19, rng);
    auto state = m.state();
    state.at("cls.W").setZero();
    state.at("cls.b").setZero();
    m.load_state(state);

    const auto ids = node_names(4);
    ReferenceGraph g = path_graph(ids);
    ad::Tape tape;
    const auto fwd = m.forward(tape, ids, to_vars(tape, random_inputs(4, 4, rng)), {&g});
    for (const ad::Var& p : fwd.probs) {
      CHECK(tape.val(p).col(0).maxCoeff() == doctest::Approx(1.0 / 19.0).epsilon(1e-12));
    }
    const ad::Var loss = m.build_loss(tape, fwd.probs, {0, 1, 2}, {3, 5, 7});
    CHECK(tape.scalar(loss) == doctest::Approx(std::log(19.0)).epsilon(1e-9));
    CHECK(std::abs(tape.scalar(loss) - 2.9444) < 1e-4);
  }

  TEST_CASE("a saturated correct prediction costs nearly nothing") {
    Rng rng(23);
    Mgat m(tiny_config(2, 8, 4), 4, 3, rng);
    auto state = m.state();
    state.at("cls.W").setZero();
    state.at("cls.b").setZero();
    state.at("cls.b")(2, 0) = 60.0;
    m.load_state(state);
    const auto ids = node_names(3);
    ReferenceGraph g = path_graph(ids);
    ad::Tape tape;
    const auto fwd = m.forward(tape, ids, to_vars(tape, random_inputs(3, 4, rng)), {&g});
    const ad::Var loss = m.build_loss(tape, fwd.probs, {0, 1}, {2, 2});
    CHECK(tape.scalar(loss) < 1e-9);
  }

  TEST_CASE("loss equals the hand-averaged negative log-likelihood") {
    Rng rng(29);
    Mgat m(tiny_config(2, 8, 4), 4, 3, rng);
    const auto ids = node_names(5);
    ReferenceGraph g = oracle::random_graph(GraphKind::entity, ids, 0.5, rng);
    ad::Tape tape;
    const auto fwd = m.forward(tape, ids, to_vars(tape, random_inputs(5, 4, rng)), {&g});
    const std::vector<int> idx = {0, 2, 4};
    const std::vector<int> gold = {1, 0, 2};
    double by_hand = 0.0;
    for (size_t i = 0; i < idx.size(); ++i) {
      const double p = tape.val(fwd.probs[static_cast<size_t>(idx[i])])(gold[i], 0);
      by_hand -= std::log(std::max(p, 1e-12));
    }
    by_hand /= static_cast<double>(idx.size());
    CHECK(tape.scalar(m.build_loss(tape, fwd.probs, idx, gold)) ==
          doctest::Approx(by_hand).epsilon(1e-12));
  }

  TEST_CASE("analytic gradients match finite differences") {
    Rng rng(31);
    Mgat m(tiny_config(2, 8, 4), 6, 3, rng);
    const auto ids = node_names(5);
    const auto inputs = random_inputs(5, 6, rng);
    ReferenceGraph g1 = path_graph(ids);
    ReferenceGraph g2(GraphKind::verb);
    g2.add_edge(ids[0], ids[2]);
    g2.add_edge(ids[1], ids[4]);
    const std::vector<const ReferenceGraph*> graphs = {&g1, &g2};
    const std::vector<int> idx = {0, 1, 3};
    const std::vector<int> gold = {2, 0, 1};

    auto loss = [&]() {
      ad::Tape tape;
      const auto fwd = m.forward(tape, ids, to_vars(tape, inputs), graphs);
      return tape.scalar(m.build_loss(tape, fwd.probs, idx, gold));
    };
    auto named = m.named_parameters();
    for (auto& [name, p] : named) p->zero_grad();
    ad::Tape tape;
    const auto fwd = m.forward(tape, ids, to_vars(tape, inputs), graphs);
    tape.backward(m.build_loss(tape, fwd.probs, idx, gold));
    std::map<std::string, ad::Mat> analytic;
    for (auto& [name, p] : named) analytic[name] = p->grad;

    const auto res = oracle::finite_difference_check(named, analytic, loss);
    INFO("worst entry: ", res.worst);
    CHECK(res.max_rel_err < 1e-4);
  }

  TEST_CASE("unknown neighbors and empty inputs are rejected") {
    Rng rng(37);
    Mgat m(tiny_config(2, 8, 4), 4, 3, rng);
    const auto ids = node_names(2);
    ReferenceGraph g(GraphKind::entity);
    g.add_edge(ids[0], "stranger");
    ad::Tape tape;
    CHECK_THROWS_AS(m.node_attention(tape, ids, to_vars(tape, random_inputs(2, 4, rng)), g),
                    ValidationError);
    CHECK_THROWS(m.forward(tape, {}, {}, {}));
    CHECK_THROWS(m.forward(tape, ids, to_vars(tape, random_inputs(2, 4, rng)), {}));
  }

  TEST_CASE("state round-trips and rejects shape mismatches") {
    Rng rng(41);
    Mgat a(tiny_config(2, 8, 4), 4, 3, rng);
    Mgat b(tiny_config(2, 8, 4), 4, 3, rng);
    const auto ids = node_names(4);
    const auto inputs = random_inputs(4, 4, rng);
    ReferenceGraph g = path_graph(ids);

    auto probs_of = [&](Mgat& m) {
      ad::Tape tape;
      const auto fwd = m.forward(tape, ids, to_vars(tape, inputs), {&g});
      return tape.val(fwd.probs[0]).col(0).eval();
    };
    CHECK((probs_of(a) - probs_of(b)).norm() > 0.0);
    b.load_state(a.state());
    CHECK((probs_of(a) - probs_of(b)).norm() == 0.0);

    auto broken = a.state();
    broken.erase("fuse.q");
    CHECK_THROWS_AS(b.load_state(broken), ValidationError);
    broken = a.state();
    broken.at("head0.W") = ad::Mat::Zero(1, 1);
    CHECK_THROWS_AS(b.load_state(broken), ValidationError);
  }

  TEST_CASE("parameter count covers heads, fusion, and classifier") {
    Rng rng(43);
    Mgat m(tiny_config(4, 8, 4), 4, 3, rng);
    CHECK(m.named_parameters().size() == 4 * 3 + 5);
    CHECK(m.parameters().size() == 4 * 3 + 5);
  }
}
