#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "droploss/categories.hpp"

namespace droploss {

// Label value marking a background row (all targets zero).
inline constexpr int kBackground = -1;

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-12;

// A batch of proposal logits. For the sigmoid family, logits is N x C and a
// background row has no positive target. For the softmax baseline, logits is
// N x (C+1) with the last column acting as the explicit background class.
struct LogitsBatch {
  Eigen::MatrixXd logits;
  std::vector<int> labels;  // kBackground or a category index in [0, C)

  bool is_foreground(int row) const { return labels[row] != kBackground; }
};

// N x C matrix of w_j values multiplying per-logit BCE terms.
using WeightMatrix = Eigen::MatrixXd;

// Numerically stable logistic function.
double sigmoid(double z);

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // dLoss/dlogits of the row-averaged loss
};

// Row-averaged weighted sigmoid cross-entropy and its exact logit gradient.
// Weights are treated as constants under differentiation.
LossResult weighted_bce(const LogitsBatch& batch, const WeightMatrix& weights);

// w_j = 1 - E(r) T_lambda(f_j) (1 - y_j).
WeightMatrix eql_weights(const LogitsBatch& batch, const CategoryTable& table);

// Foreground rows as EQL; background rows
// w_j = 1 - T_lambda(f_j) * min(-log_b(p_j), 1). Requires base > 1.
WeightMatrix beql_weights(const LogitsBatch& batch, const CategoryTable& table,
                          double base);

// Bernoulli keep-probabilities for background cells, from the foreground
// occurrence ratio of the current batch.
struct MuPair {
  double tail = 0.0;
  double freq = 0.0;
};

struct BinOccurrences {
  long rare = 0;
  long common = 0;
  long frequent = 0;
  long all() const { return rare + common + frequent; }
};

// Foreground occurrences of the batch, split by the bin of their category.
BinOccurrences foreground_bin_counts(const std::vector<int>& labels,
                                     const CategoryTable& table);

// mu_tail = (n_rare + n_common) / n_all, mu_freq = n_frequent / n_all.
// A batch with no foreground rows falls back to the dataset-level tail
// instance fraction so long-run drop behavior is preserved.
MuPair droploss_mu(const BinOccurrences& occ, const CategoryTable& table);

// Foreground rows as EQL; each background cell draws w in {0,1} with
// P(w=1) = mu.tail for tail categories and mu.freq otherwise.
WeightMatrix droploss_weights(const LogitsBatch& batch, const CategoryTable& table,
                              const MuPair& mu, std::mt19937_64& rng);

// Like droploss_weights with a constant keep probability for background tail
// cells; background frequent cells always keep weight 1.
WeightMatrix fixed_drop_weights(const LogitsBatch& batch, const CategoryTable& table,
                                double keep_prob, std::mt19937_64& rng);

// Softmax cross-entropy baseline over C+1 logits (explicit background class).
// expected_categories is the foreground category count C.
LossResult softmax_ce(const LogitsBatch& batch, int expected_categories);

enum class LossKind { kBce, kSoftmax, kEql, kBeql, kDropLoss, kFixedDrop };

const char* loss_name(LossKind kind);
LossKind loss_from_name(const std::string& name);

struct LossSpec {
  LossKind kind = LossKind::kBce;
  double beql_base = 4.0;
  double keep_prob = 0.5;
};

// One loss evaluation: weight rule (if any), loss value, logit gradient.
struct LossEval {
  double loss = 0.0;
  Eigen::MatrixXd grad;
  WeightMatrix weights;  // empty for the softmax baseline
  MuPair mu;             // populated for DropLoss/FixedDrop
};

// Weights for any rule in the sigmoid family (all-ones for plain BCE).
WeightMatrix make_weights(const LossSpec& spec, const LogitsBatch& batch,
                          const CategoryTable& table, std::mt19937_64& rng);

LossEval evaluate_loss(const LossSpec& spec, const LogitsBatch& batch,
                       const CategoryTable& table, std::mt19937_64& rng);

}  // namespace droploss
