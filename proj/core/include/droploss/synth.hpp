#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "droploss/categories.hpp"

namespace droploss {

// Synthetic long-tailed proposal generator standing in for a proposal
// pipeline: Zipf (or explicitly constructed) category counts, Gaussian class
// prototypes, and near-miss background proposals.
struct SynthConfig {
  int num_categories = 60;
  double zipf_exponent = 1.2;
  int feature_dim = 32;
  double fg_noise_sigma = 0.2;
  double near_miss_sigma = 0.6;   // must exceed fg_noise_sigma
  double near_miss_fraction = 0.9;
  // Strength of the direction shared by all prototypes. Nonzero overlap makes
  // foreground features of different categories correlated, the way real
  // object proposals share generic object appearance.
  double proto_overlap = 0.2;
  long dataset_size = 24000;
  double fg_fraction = 0.25;
  // When non-empty, per-category foreground instance counts are realized
  // exactly instead of being sampled from the Zipf law.
  std::vector<std::int64_t> category_counts;
  std::uint64_t seed = 0;
  // Distinguishes pools drawn from the same seed (prototypes stay identical;
  // instances differ). Stream 0 is the training pool, 1 the eval pool.
  std::uint64_t pool_stream = 0;
  LambdaMode lambda_mode = LambdaMode::kBinAligned;
  double lambda = 0.0;
};

// p_k proportional to 1/k^s, normalized, sorted descending.
std::vector<double> zipf_category_distribution(int num_categories, double exponent);

// Long-tail count vector with per_bin categories in each of the three bins,
// scaled so the frequent bin absorbs total_fg minus the rare/common mass.
// Sorted descending (category 0 is the most frequent).
std::vector<std::int64_t> long_tail_binned_counts(int per_bin, long total_fg);

struct ProposalPool {
  Eigen::MatrixXd features;  // N x d
  std::vector<int> labels;   // kBackground or category index
  std::vector<int> fg_rows;
  std::vector<int> bg_rows;
  CategoryTable table;  // from realized foreground instance counts

  long size() const { return static_cast<long>(labels.size()); }
};

ProposalPool generate_pool(const SynthConfig& config);

struct ProposalBatch {
  Eigen::MatrixXd features;
  std::vector<int> labels;
};

// Draws batch_size/4 foreground and 3*batch_size/4 background proposals
// uniformly from the pool, shuffled.
ProposalBatch sample_batch(const ProposalPool& pool, int batch_size,
                           std::mt19937_64& rng);

// Repeat factor sampling: each foreground proposal of category c is
// replicated max(1, sqrt(threshold / f_c)) times in expectation, the
// fractional part realized by a Bernoulli draw. Background rows untouched.
ProposalPool repeat_factor_resample(const ProposalPool& pool, double threshold,
                                    std::mt19937_64& rng);

// CSV round trip: feature columns f0..f{d-1} plus a label column
// (-1 = background), header row included.
void write_pool_csv(const ProposalPool& pool, const std::string& path);
ProposalPool read_pool_csv(const std::string& path,
                           LambdaMode mode = LambdaMode::kBinAligned,
                           double lambda = 0.0);

}  // namespace droploss
