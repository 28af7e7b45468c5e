#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "droploss/metrics.hpp"
#include "droploss/model.hpp"

using namespace droploss;

namespace {

SynthConfig separable_config() {
  SynthConfig config;
  config.num_categories = 6;
  config.feature_dim = 16;
  config.fg_noise_sigma = 0.05;
  config.near_miss_sigma = 0.6;
  config.near_miss_fraction = 0.1;
  config.proto_overlap = 0.0;  // independent prototypes, easy problem
  config.category_counts = {160, 160, 160, 160, 160, 150};
  config.dataset_size = 3800;
  config.fg_fraction = 950.0 / 3800.0;
  config.seed = 2;
  return config;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("initialization is seeded and shaped") {
  ClassifierParams linear = init_params(8, 0, 5, 42);
  CHECK_FALSE(linear.has_hidden);
  CHECK(linear.w2.rows() == 8);
  CHECK(linear.w2.cols() == 5);
  CHECK(linear.b2.size() == 5);
  CHECK(linear.b2.isZero());
  ClassifierParams again = init_params(8, 0, 5, 42);
  CHECK(linear.w2 == again.w2);
  ClassifierParams other = init_params(8, 0, 5, 43);
  CHECK(linear.w2 != other.w2);

  ClassifierParams hidden = init_params(8, 16, 5, 42);
  CHECK(hidden.has_hidden);
  CHECK(hidden.w1.rows() == 8);
  CHECK(hidden.w1.cols() == 16);
  CHECK(hidden.w2.rows() == 16);
  // Init scale follows 1/sqrt(fan_in).
  const double std_w1 = std::sqrt(hidden.w1.array().square().mean());
  CHECK(std_w1 == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(0.35));
}

TEST_CASE("linear forward is an affine map") {
  ClassifierParams params = init_params(3, 0, 2, 1);
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, -1, 0, 1;
  Eigen::MatrixXd logits = forward(params, x);
  Eigen::MatrixXd expected = x * params.w2;
  expected.rowwise() += params.b2.transpose();
  CHECK(logits == expected);
}

TEST_CASE("backward matches finite differences end to end") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int rows = 7, d = 5, cats = 4;
  Eigen::MatrixXd x(rows, d);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
  LogitsBatch batch;
  batch.labels = {0, kBackground, 1, 2, kBackground, 3, 1};
  WeightMatrix w = WeightMatrix::Ones(rows, cats);
  w(0, 2) = 0.0;
  w(3, 1) = 0.5;

  for (int hidden : {0, 6}) {
    ClassifierParams params = init_params(d, hidden, cats, 7);
    auto loss_of = [&](const ClassifierParams& p) {
      batch.logits = forward(p, x);
      return weighted_bce(batch, w).loss;
    };
    batch.logits = forward(params, x);
    LossResult res = weighted_bce(batch, w);
    ParamGrads grads = backward(params, x, res.grad);

    const double h = 1e-6;
    auto check_block = [&](Eigen::MatrixXd& block, const Eigen::MatrixXd& analytic) {
      for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (Eigen::Index c = 0; c < block.cols(); ++c) {
          const double keep = block(r, c);
          block(r, c) = keep + h;
          const double up = loss_of(params);
          block(r, c) = keep - h;
          const double down = loss_of(params);
          block(r, c) = keep;
          CHECK(analytic(r, c) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
        }
      }
    };
    check_block(params.w2, grads.w2);
    Eigen::MatrixXd b2m = params.b2;
    for (Eigen::Index r = 0; r < b2m.rows(); ++r) {
      const double keep = params.b2(r);
      params.b2(r) = keep + h;
      const double up = loss_of(params);
      params.b2(r) = keep - h;
      const double down = loss_of(params);
      params.b2(r) = keep;
      CHECK(grads.b2(r) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
    }
    if (hidden > 0) {
      check_block(params.w1, grads.w1);
    }
  }
}

TEST_CASE("learning rate schedule steps at the milestones") {
  TrainSchedule schedule;
  schedule.iterations = 900;
  schedule.base_lr = 0.2;
  CHECK(lr_at(schedule, 0) == 0.2);
  CHECK(lr_at(schedule, 599) == 0.2);
  CHECK(lr_at(schedule, 600) == doctest::Approx(0.02));
  CHECK(lr_at(schedule, 799) == doctest::Approx(0.02));
  CHECK(lr_at(schedule, 800) == doctest::Approx(0.002));
  CHECK(lr_at(schedule, 899) == doctest::Approx(0.002));
}

TEST_CASE("sgd step unrolls momentum and weight decay by hand") {
  ClassifierParams params;
  params.has_hidden = false;
  params.w2 = Eigen::MatrixXd::Constant(1, 1, 2.0);
  params.b2 = Eigen::VectorXd::Zero(1);
  MomentumState state = MomentumState::zeros_like(params);
  ParamGrads grads;
  grads.w2 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  grads.b2 = Eigen::VectorXd::Zero(1);

  TrainSchedule schedule;
  schedule.iterations = 100;
  schedule.base_lr = 0.1;
  schedule.momentum = 0.9;
  schedule.weight_decay = 0.01;

  // Step 1: v = 1 + 0.01*2 = 1.02; w = 2 - 0.1*1.02 = 1.898.
  sgd_step(params, grads, schedule, 0, state);
  CHECK(params.w2(0, 0) == doctest::Approx(1.898).epsilon(1e-12));
  // Step 2: v = 0.9*1.02 + 1 + 0.01*1.898 = 1.93698;
  // w = 1.898 - 0.1*1.93698 = 1.704302.
  sgd_step(params, grads, schedule, 1, state);
  CHECK(params.w2(0, 0) == doctest::Approx(1.704302).epsilon(1e-12));
}

TEST_CASE("short training runs are finite, logged, and reproducible") {
  ProposalPool pool = generate_pool(separable_config());
  TrainSchedule schedule;
  schedule.iterations = 30;
  schedule.batch_size = 64;
  schedule.snapshot_every = 10;
  LossSpec spec{LossKind::kDropLoss};

  TrainResult a = train(pool, pool.table, spec, schedule, 99);
  REQUIRE(a.log.rows.size() == 30);
  for (const auto& row : a.log.rows) {
    CHECK(std::isfinite(row.loss));
    CHECK(row.lr > 0.0);
  }
  CHECK(a.log.early_iteration == 3);
  CHECK(a.log.snapshots.size() == 3);
  CHECK(a.log.ledger.total() > 0.0);

  TrainResult b = train(pool, pool.table, spec, schedule, 99);
  CHECK(a.params.w2 == b.params.w2);
  CHECK(a.params.b2 == b.params.b2);
  CHECK(a.log.rows.back().loss == b.log.rows.back().loss);

  TrainResult c = train(pool, pool.table, spec, schedule, 100);
  CHECK(a.params.w2 != c.params.w2);
}

TEST_CASE("an easy pool trains to high recall") {
  ProposalPool pool = generate_pool(separable_config());
  SynthConfig eval_config = separable_config();
  eval_config.pool_stream = 1;
  eval_config.category_counts = {60, 60, 60, 60, 60, 60};
  eval_config.dataset_size = 1440;
  eval_config.fg_fraction = 0.25;
  ProposalPool eval_pool = generate_pool(eval_config);

  TrainSchedule schedule;
  schedule.iterations = 1500;
  schedule.batch_size = 128;
  TrainResult result = train(pool, pool.table, LossSpec{LossKind::kBce},
                             schedule, 1);
  EvalReport report = evaluate(result.params, eval_pool, pool.table, 0.5);
  CHECK(report.macro_mean_recall > 0.95);
}

TEST_CASE("softmax training with an absurd learning rate aborts") {
  ProposalPool pool = generate_pool(separable_config());
  TrainSchedule schedule;
  schedule.iterations = 200;
  schedule.batch_size = 64;
  schedule.base_lr = 1e18;
  schedule.weight_decay = 1.0;
  CHECK_THROWS_AS(train(pool, pool.table, LossSpec{LossKind::kSoftmax}, schedule, 1),
                  TrainingDiverged);
}

TEST_CASE("parameter csv round trip is exact") {
  ClassifierParams params = init_params(5, 7, 3, 123);
  params.b1.setRandom();
  params.b2.setRandom();
  const char* path = "params_test.csv";
  write_params_csv(params, path);
  ClassifierParams loaded = read_params_csv(path);
  CHECK(loaded.has_hidden);
  CHECK(loaded.w1 == params.w1);
  CHECK(loaded.b1 == params.b1);
  CHECK(loaded.w2 == params.w2);
  CHECK(loaded.b2 == params.b2);
  std::remove(path);

  ClassifierParams linear = init_params(5, 0, 3, 9);
  write_params_csv(linear, path);
  ClassifierParams loaded2 = read_params_csv(path);
  CHECK_FALSE(loaded2.has_hidden);
  CHECK(loaded2.w2 == linear.w2);
  std::remove(path);
}

TEST_SUITE_END();
