#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace droploss {

enum class Bin { kRare, kCommon, kFrequent };

const char* bin_name(Bin b);

// Bin from the absolute occurrence count: 1-10 rare, 11-100 common,
// >100 frequent. A never-seen category (count 0) is treated as rare.
Bin bin_of(std::int64_t count);

// Low-frequency indicator: 1 iff f < lambda (strict inequality).
int tail_indicator(double f, double lambda);

enum class LambdaMode {
  // lambda placed strictly between the largest rare/common frequency and the
  // smallest frequent frequency, so the indicator selects exactly rare+common.
  kBinAligned,
  // lambda supplied by the caller.
  kExplicit,
};

// Per-category frequency statistics shared by every weight rule. Immutable
// after construction; safe to share read-only across threads.
class CategoryTable {
 public:
  // An empty table; usable only as a placeholder before assignment.
  CategoryTable() = default;

  static CategoryTable from_counts(const std::vector<std::int64_t>& counts,
                                   LambdaMode mode, double lambda = 0.0);

  // Two-column CSV (category_id,count), header row required. Rows may appear
  // in any order; ids must cover 0..C-1 exactly once.
  static CategoryTable from_csv(const std::string& path, LambdaMode mode,
                                double lambda = 0.0);

  int num_categories() const { return static_cast<int>(counts_.size()); }
  std::int64_t count(int j) const { return counts_[j]; }
  double frequency(int j) const { return frequencies_[j]; }
  Bin bin(int j) const { return bins_[j]; }
  double lambda() const { return lambda_; }

  // T_lambda(f_j). Under bin-aligned construction this is exactly
  // (bin != Frequent), including degenerate count vectors where no frequency
  // threshold in [0,1] could separate the bins.
  bool is_tail(int j) const { return tail_[j]; }

  // Fraction of all instances that belong to rare+common categories.
  double tail_instance_fraction() const { return tail_fraction_; }

  const std::vector<std::int64_t>& counts() const { return counts_; }
  const std::vector<double>& frequencies() const { return frequencies_; }

 private:
  std::vector<std::int64_t> counts_;
  std::vector<double> frequencies_;
  std::vector<Bin> bins_;
  std::vector<bool> tail_;
  double lambda_ = 0.0;
  double tail_fraction_ = 0.0;
};

}  // namespace droploss
