// Throughput benchmarks for the weight rules, loss evaluation, and one full
// training iteration (batch sampling + forward + loss + backward + SGD).

#include <benchmark/benchmark.h>

#include <random>

#include "droploss/losses.hpp"
#include "droploss/model.hpp"
#include "droploss/synth.hpp"

namespace {

using namespace droploss;

struct Fixture {
  ProposalPool pool;
  LogitsBatch batch;
  std::mt19937_64 rng{42};

  Fixture() {
    SynthConfig config;
    config.num_categories = 60;
    config.category_counts = long_tail_binned_counts(20, 15000);
    config.dataset_size = 60000;
    config.seed = 7;
    pool = generate_pool(config);

    ProposalBatch b = sample_batch(pool, 512, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    batch.logits.resize(b.features.rows(), pool.table.num_categories());
    for (Eigen::Index i = 0; i < batch.logits.rows(); ++i)
      for (Eigen::Index j = 0; j < batch.logits.cols(); ++j)
        batch.logits(i, j) = normal(rng);
    batch.labels = b.labels;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_EqlWeights(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(eql_weights(f.batch, f.pool.table));
}
BENCHMARK(BM_EqlWeights);

void BM_BeqlWeights(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(beql_weights(f.batch, f.pool.table, 4.0));
}
BENCHMARK(BM_BeqlWeights);

void BM_DropLossWeights(benchmark::State& state) {
  Fixture& f = fixture();
  BinOccurrences occ = foreground_bin_counts(f.batch.labels, f.pool.table);
  MuPair mu = droploss_mu(occ, f.pool.table);
  for (auto _ : state)
    benchmark::DoNotOptimize(droploss_weights(f.batch, f.pool.table, mu, f.rng));
}
BENCHMARK(BM_DropLossWeights);

void BM_WeightedBce(benchmark::State& state) {
  Fixture& f = fixture();
  WeightMatrix w = WeightMatrix::Ones(f.batch.logits.rows(), f.batch.logits.cols());
  for (auto _ : state)
    benchmark::DoNotOptimize(weighted_bce(f.batch, w));
}
BENCHMARK(BM_WeightedBce);

void BM_SoftmaxCe(benchmark::State& state) {
  Fixture& f = fixture();
  LogitsBatch wide;
  wide.labels = f.batch.labels;
  wide.logits.resize(f.batch.logits.rows(), f.batch.logits.cols() + 1);
  wide.logits.leftCols(f.batch.logits.cols()) = f.batch.logits;
  wide.logits.col(f.batch.logits.cols()).setZero();
  for (auto _ : state)
    benchmark::DoNotOptimize(softmax_ce(wide, f.pool.table.num_categories()));
}
BENCHMARK(BM_SoftmaxCe);

void BM_TrainIteration(benchmark::State& state) {
  Fixture& f = fixture();
  TrainSchedule schedule;
  ClassifierParams params = init_params(f.pool.features.cols(), 0,
                                        f.pool.table.num_categories(), 1);
  MomentumState momentum = MomentumState::zeros_like(params);
  LossSpec spec{LossKind::kDropLoss};
  int iteration = 0;
  for (auto _ : state) {
    ProposalBatch b = sample_batch(f.pool, schedule.batch_size, f.rng);
    LogitsBatch lb{forward(params, b.features), b.labels};
    LossEval eval = evaluate_loss(spec, lb, f.pool.table, f.rng);
    ParamGrads grads = backward(params, b.features, eval.grad);
    sgd_step(params, grads, schedule, iteration++, momentum);
    benchmark::DoNotOptimize(params.w2.sum());
  }
}
BENCHMARK(BM_TrainIteration);

}  // namespace

BENCHMARK_MAIN();
