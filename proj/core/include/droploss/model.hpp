#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "droploss/gradient_ledger.hpp"
#include "droploss/losses.hpp"
#include "droploss/synth.hpp"

namespace droploss {

// Linear (hidden_dim = 0) or one-tanh-hidden-layer classifier with one output
// per category (plus one for the softmax baseline's background class).
struct ClassifierParams {
  Eigen::MatrixXd w1;  // in x hidden (unused when linear)
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // (hidden or in) x out
  Eigen::VectorXd b2;
  bool has_hidden = false;

  int in_dim() const { return static_cast<int>(has_hidden ? w1.rows() : w2.rows()); }
  int out_dim() const { return static_cast<int>(w2.cols()); }
};

// Gaussian init, std 1/sqrt(fan_in), zero biases, from the experiment seed
// alone so every loss variant starts from the same point.
ClassifierParams init_params(int in_dim, int hidden_dim, int out_dim,
                             std::uint64_t seed);

Eigen::MatrixXd forward(const ClassifierParams& params,
                        const Eigen::MatrixXd& features);

struct ParamGrads {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

// Chain rule from upstream = dLoss/dlogits (already including the batch-mean
// factor) back to the parameters.
ParamGrads backward(const ClassifierParams& params, const Eigen::MatrixXd& features,
                    const Eigen::MatrixXd& upstream);

struct TrainSchedule {
  int iterations = 3000;
  double base_lr = 0.5;
  double decay_factor = 0.1;
  double milestone1 = 2.0 / 3.0;  // fractions of iterations
  double milestone2 = 8.0 / 9.0;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 512;
  int snapshot_every = 100;
  int hidden_dim = 64;  // 0 selects the linear model
};

double lr_at(const TrainSchedule& schedule, int iteration);

struct MomentumState {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  static MomentumState zeros_like(const ClassifierParams& params);
};

// v <- momentum * v + grad + weight_decay * param;
// param <- param - lr(iteration) * v.
void sgd_step(ClassifierParams& params, const ParamGrads& grads,
              const TrainSchedule& schedule, int iteration, MomentumState& state);

// One row per training iteration. Keep counters accumulate background weight
// mass per bin (cells kept vs cells seen) for the drop-rate audit.
struct IterRecord {
  int iteration = 0;
  double loss = 0.0;
  double lr = 0.0;
  double mu_tail = 1.0;  // expected background keep probability, tail bins
  double mu_freq = 1.0;
  double kept[3] = {0, 0, 0};  // indexed by Bin
  long total[3] = {0, 0, 0};
  long fg_occ[3] = {0, 0, 0};  // foreground occurrences per bin
};

struct LedgerSnapshot {
  int iteration = 0;
  GradientLedger ledger;
};

struct TrainLog {
  std::vector<IterRecord> rows;
  GradientLedger ledger;  // cumulative over all iterations
  std::vector<LedgerSnapshot> snapshots;
  ClassifierParams early_params;  // checkpoint at 10% of iterations
  int early_iteration = 0;
};

struct TrainResult {
  ClassifierParams params;
  TrainLog log;
};

// Thrown when the loss becomes non-finite; names the iteration.
struct TrainingDiverged : std::runtime_error {
  int iteration;
  explicit TrainingDiverged(int it)
      : std::runtime_error("non-finite loss at iteration " + std::to_string(it)),
        iteration(it) {}
};

// Full training loop: sample batch, build weights, loss/grad, backward, SGD.
// Deterministic given (pool, table, spec, schedule, seed).
TrainResult train(const ProposalPool& pool, const CategoryTable& table,
                  const LossSpec& spec, const TrainSchedule& schedule,
                  std::uint64_t seed);

void write_params_csv(const ClassifierParams& params, const std::string& path);
ClassifierParams read_params_csv(const std::string& path);

}  // namespace droploss
