#include <doctest.h>

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrefg/config.hpp"
#include "mrefg/model_io.hpp"
#include "mrefg/synthgen.hpp"
#include "mrefg/util.hpp"
#include "oracles.hpp"

using namespace mrefg;

namespace {

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.labeled_frac = 0.2;
  cfg.unlabeled_frac = 0.4;
  cfg.seed = 17;
  cfg.encoder.token_dim = 10;
  cfg.encoder.tag_dim = 4;
  cfg.encoder.position_dim = 4;
  cfg.encoder.hidden = 6;
  cfg.encoder.max_offset = 8;
  cfg.encoder.dropout = 0.0;
  cfg.mgat.heads = 2;
  cfg.mgat.dim = 8;
  cfg.mgat.fusion_dim = 6;
  cfg.init_epochs = 4;
  cfg.epochs_p = 2;
  cfg.epochs_m = 3;
  cfg.max_iters = 0;
  return cfg;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("parsing handles comments, blanks, and whitespace") {
    const std::string text =
        "# training setup\n"
        "\n"
        "  seed = 42   # inline comment\n"
        "optimizer=sgd\n"
        "select_frac = 0.25\n";
    const Config cfg = Config::parse(text);
    CHECK(cfg.entries().size() == 3);
    CHECK(cfg.get_u64("seed", 0) == 42);
    CHECK(cfg.get_string("optimizer", "") == "sgd");
    CHECK(cfg.get_double("select_frac", 0.0) == doctest::Approx(0.25));
  }

  TEST_CASE("malformed lines are rejected with their line number") {
    CHECK_THROWS_WITH_AS(Config::parse("seed=1\nnot a pair\n", "cfg"),
                         doctest::Contains("line 2"), ParseError);
    CHECK_THROWS_AS(Config::parse("=5\n"), ParseError);
    CHECK_THROWS_WITH_AS(Config::parse("seed=1\nseed=2\n"),
                         doctest::Contains("duplicate"), ParseError);
  }

  TEST_CASE("typed getters fall back or fail loudly") {
    const Config cfg = Config::parse(
        "count=7\nrate=0.5\nflag=yes\nneg=false\nword=hello\nbad=12x\n");
    CHECK(cfg.get_int("count", -1) == 7);
    CHECK(cfg.get_int("missing", -1) == -1);
    CHECK(cfg.get_double("rate", 0.0) == 0.5);
    CHECK(cfg.get_double("missing", 2.5) == 2.5);
    CHECK(cfg.get_bool("flag", false));
    CHECK_FALSE(cfg.get_bool("neg", true));
    CHECK(cfg.get_bool("missing", true));
    CHECK(cfg.get_string("word", "") == "hello");
    CHECK_THROWS_AS(cfg.get_int("bad", 0), ParseError);
    CHECK_THROWS_AS(cfg.get_double("word", 0.0), ParseError);
    CHECK_THROWS_AS(cfg.get_bool("word", false), ParseError);
    CHECK_THROWS_AS(cfg.get_u64("word", 0), ParseError);
  }

  TEST_CASE("canonical text is sorted and drives the hash") {
    Config cfg;
    cfg.set("zeta", "2");
    cfg.set("alpha", "1");
    CHECK(cfg.canonical() == "alpha=1\nzeta=2\n");
    CHECK(cfg.hash() == fnv1a("alpha=1\nzeta=2\n"));
    // value changes change the hash
    cfg.set("alpha", "3");
    CHECK(cfg.hash() != fnv1a("alpha=1\nzeta=2\n"));
  }

  TEST_CASE("loading from a file matches parsing the same text") {
    oracle::TempDir dir("config");
    const std::string path = dir.file("train.cfg");
    std::ofstream(path) << "seed=9\nmax_iters=2\n";
    const Config cfg = Config::load(path);
    CHECK(cfg.get_u64("seed", 0) == 9);
    CHECK(cfg.get_int("max_iters", 0) == 2);
    CHECK_THROWS_AS(Config::load(dir.file("nope.cfg")), IoError);
  }

  TEST_CASE("a training config survives the file-format round trip") {
    const TrainConfig original = tiny_train_config();
    const Config serialized = to_config(original);
    // re-parse the canonical text, then materialize again
    const TrainConfig restored = train_config_from(Config::parse(serialized.canonical()));
    CHECK(restored.labeled_frac == original.labeled_frac);
    CHECK(restored.unlabeled_frac == original.unlabeled_frac);
    CHECK(restored.seed == original.seed);
    CHECK(restored.graph.delta == original.graph.delta);
    CHECK(restored.graph.max_degree == original.graph.max_degree);
    CHECK(restored.graphs == original.graphs);
    CHECK(restored.encoder.token_dim == original.encoder.token_dim);
    CHECK(restored.encoder.hidden == original.encoder.hidden);
    CHECK(restored.encoder.dropout == original.encoder.dropout);
    CHECK(restored.encoder.finetune_tokens == original.encoder.finetune_tokens);
    CHECK(restored.mgat.heads == original.mgat.heads);
    CHECK(restored.mgat.dim == original.mgat.dim);
    CHECK(restored.mgat.fusion_dim == original.mgat.fusion_dim);
    CHECK(restored.optimizer == original.optimizer);
    CHECK(restored.lr_p == original.lr_p);
    CHECK(restored.lr_m == original.lr_m);
    CHECK(restored.batch_size == original.batch_size);
    CHECK(restored.init_epochs == original.init_epochs);
    CHECK(restored.epochs_p == original.epochs_p);
    CHECK(restored.epochs_m == original.epochs_m);
    CHECK(restored.max_iters == original.max_iters);
    CHECK(restored.patience == original.patience);
    CHECK(restored.select_frac == original.select_frac);
    CHECK(restored.select_frac_of_original == original.select_frac_of_original);
    // the round trip is a fixed point of the canonical form
    CHECK(to_config(restored).canonical() == serialized.canonical());
  }

  TEST_CASE("unknown keys are rejected with the known-key list") {
    Config cfg = to_config(tiny_train_config());
    cfg.set("learning_rate", "0.1");
    CHECK_THROWS_WITH_AS(train_config_from(cfg), doctest::Contains("learning_rate"),
                         ValidationError);
  }

  TEST_CASE("graph lists parse by name") {
    const auto all = parse_graph_list("entity,verb,semantics");
    REQUIRE(all.size() == 3);
    CHECK(all[0] == GraphKind::entity);
    CHECK(all[1] == GraphKind::verb);
    CHECK(all[2] == GraphKind::semantics);
    const auto spaced = parse_graph_list(" verb , entity ");
    REQUIRE(spaced.size() == 2);
    CHECK(spaced[0] == GraphKind::verb);
    CHECK_THROWS_AS(parse_graph_list("entity,psychic"), ValidationError);
    CHECK_THROWS_AS(parse_graph_list(""), ValidationError);
    CHECK_THROWS_AS(parse_graph_list(" , "), ValidationError);
  }

  TEST_CASE("checkpoints restore a model that predicts identically") {
    const auto corpus = generate(SynthSpec::basic(3, 20, 0.7, 0.05, 21)).samples;
    SemiSupervisedRunner runner(tiny_train_config(), corpus);
    runner.run();

    oracle::TempDir dir("ckpt");
    const std::string path = dir.file("checkpoint.json");
    save_checkpoint(snapshot(runner), path);
    const CheckpointData loaded = load_checkpoint(path);

    // relation labels come back in index order
    const RelationVocab relations = restore_relations(loaded);
    CHECK(relations.size() == runner.relations().size());
    for (int i = 0; i < relations.size(); ++i) {
      CHECK(relations.label(i) == runner.relations().label(i));
    }

    // the restored encoder reproduces the live model's distributions
    auto encoder = restore_encoder(loaded);
    CHECK(encoder->embedding_dim() == runner.encoder().embedding_dim());
    int compared = 0;
    for (const Sample& s : runner.split().dev) {
      const Eigen::VectorXd a = runner.encoder().predict_proba(s);
      const Eigen::VectorXd b = encoder->predict_proba(s);
      CHECK((a - b).norm() == 0.0);
      if (++compared == 5) break;
    }
    CHECK(compared > 0);

    // the restored graph module carries the exact same tensors
    auto mgat = restore_mgat(loaded, runner.encoder().embedding_dim());
    const auto live = runner.mgat().state();
    const auto back = mgat->state();
    REQUIRE(live.size() == back.size());
    for (const auto& [name, tensor] : live) {
      REQUIRE(back.count(name) == 1);
      CHECK((tensor - back.at(name)).norm() == 0.0);
    }
  }

  TEST_CASE("tampered checkpoints are refused") {
    const auto corpus = generate(SynthSpec::basic(3, 20, 0.7, 0.05, 22)).samples;
    SemiSupervisedRunner runner(tiny_train_config(), corpus);
    runner.run();

    oracle::TempDir dir("ckpt");
    const std::string path = dir.file("checkpoint.json");
    save_checkpoint(snapshot(runner), path);

    // edit a config entry without refreshing the stored hash
    nlohmann::json j;
    std::ifstream(path) >> j;
    j["config"]["seed"] = "999999";
    std::ofstream(path) << j.dump();
    CHECK_THROWS_AS(load_checkpoint(path), ValidationError);

    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.json")), IoError);
    const std::string junk = dir.file("junk.json");
    std::ofstream(junk) << "not json at all";
    CHECK_THROWS_AS(load_checkpoint(junk), ParseError);
  }
}
