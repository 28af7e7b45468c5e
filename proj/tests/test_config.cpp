#include <doctest.h>

#include <cstdio>
#include <sstream>

#include "droploss/config.hpp"

using namespace droploss;

TEST_SUITE_BEGIN("config");

TEST_CASE("defaults survive an empty config") {
  std::istringstream in("");
  ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.synth.num_categories == 60);
  CHECK(cfg.counts_mode == "binned");
  CHECK(cfg.loss.kind == LossKind::kBce);
  CHECK(cfg.schedule.iterations == 3000);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("keys, comments, and whitespace parse") {
  std::istringstream in(
      "# experiment\n"
      "\n"
      "synth.num_categories = 12\n"
      "loss.rule = droploss\n"
      "  train.iterations=250  \n"
      "eval.threshold = 0.4\n"
      "seeds = 3,5, 8\n"
      "output.dir = out_x\n");
  ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.synth.num_categories == 12);
  CHECK(cfg.loss.kind == LossKind::kDropLoss);
  CHECK(cfg.schedule.iterations == 250);
  CHECK(cfg.eval_threshold == 0.4);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 5, 8});
  CHECK(cfg.out_dir == "out_x");
}

TEST_CASE("unknown keys and bad values report the line number") {
  std::istringstream in("loss.rule = eql\nloss.gamma = 2\n");
  try {
    parse_config(in);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
  }

  std::istringstream bad_value("\n\ntrain.iterations = soon\n");
  try {
    parse_config(bad_value);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
  }

  std::istringstream bad_rule("loss.rule = hinge\n");
  CHECK_THROWS_AS(parse_config(bad_rule), ConfigError);
  std::istringstream no_eq("loss.rule\n");
  CHECK_THROWS_AS(parse_config(no_eq), ConfigError);
  std::istringstream empty_seeds("seeds = ,\n");
  CHECK_THROWS_AS(parse_config(empty_seeds), ConfigError);
}

TEST_CASE("an explicit lambda switches the threshold mode") {
  std::istringstream in("loss.rule = eql\nloss.lambda = 0.003\n");
  ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.synth.lambda_mode == LambdaMode::kExplicit);
  CHECK(cfg.synth.lambda == 0.003);
}

TEST_CASE("config echo round trips through the parser") {
  std::istringstream in(
      "loss.rule = beql\n"
      "loss.beql_base = 7\n"
      "train.iterations = 120\n"
      "synth.num_categories = 9\n"
      "eval.per_category = 11\n");
  ExperimentConfig cfg = parse_config(in);
  const char* path = "config_echo_test.txt";
  write_config(cfg, 77, path);
  ExperimentConfig loaded = load_config(path);
  CHECK(loaded.loss.kind == LossKind::kBeql);
  CHECK(loaded.loss.beql_base == 7.0);
  CHECK(loaded.schedule.iterations == 120);
  CHECK(loaded.synth.num_categories == 9);
  CHECK(loaded.eval_per_category == 11);
  CHECK(loaded.seeds == std::vector<std::uint64_t>{77});
  std::remove(path);
}

TEST_CASE("training pool construction follows the counts mode") {
  std::istringstream in(
      "synth.num_categories = 9\n"
      "synth.dataset_size = 4000\n"
      "synth.feature_dim = 8\n");
  ExperimentConfig cfg = parse_config(in);
  ProposalPool pool = build_train_pool(cfg, 4);
  CHECK(pool.table.num_categories() == 9);
  int rare = 0, common = 0, frequent = 0;
  for (int j = 0; j < 9; ++j) {
    switch (pool.table.bin(j)) {
      case Bin::kRare: ++rare; break;
      case Bin::kCommon: ++common; break;
      case Bin::kFrequent: ++frequent; break;
    }
  }
  CHECK(rare == 3);
  CHECK(common == 3);
  CHECK(frequent == 3);

  cfg.synth.num_categories = 10;  // not divisible by 3
  CHECK_THROWS(build_train_pool(cfg, 4));

  cfg.synth.num_categories = 9;
  ProposalPool eval_pool = build_eval_pool(cfg, 4);
  for (int j = 0; j < 9; ++j) CHECK(eval_pool.table.count(j) == cfg.eval_per_category);
  CHECK(static_cast<long>(eval_pool.bg_rows.size()) == cfg.eval_bg_size);
}

TEST_SUITE_END();
