#pragma once

#include <optional>
#include <string>
#include <vector>

#include "droploss/config.hpp"
#include "droploss/gradient_ledger.hpp"
#include "droploss/metrics.hpp"
#include "droploss/model.hpp"

namespace droploss {

// Mean sigmoid score per foreground category over background rows, for the
// prediction-score suppression profile. Requires a sigmoid-family model.
std::vector<double> bg_score_profile(const ClassifierParams& params,
                                     const Eigen::MatrixXd& bg_features,
                                     const CategoryTable& table);

// Categories ordered by descending frequency (rank 0 = most frequent), ties
// broken by index.
std::vector<int> frequency_rank_order(const CategoryTable& table);

struct ParetoPoint {
  std::string family;
  double param = 0.0;  // sweep parameter; 0 for parameterless families
  int seed_count = 0;
  double tail = 0.0;     // mean of rare+common bin recalls, median over seeds
  double head = 0.0;     // frequent bin recall, median over seeds
  double overall = 0.0;  // macro mean recall, median over seeds
  bool on_front = false;
  bool failed = false;
};

// Trains one model per (grid point, seed) and reports per-point medians.
// Parameterless families ignore the grid and contribute a single point.
// A training abort flags the point and the sweep continues. jobs > 1 runs
// points concurrently; results are aggregated in grid order either way.
std::vector<ParetoPoint> pareto_sweep(const ExperimentConfig& base_config,
                                      LossKind family,
                                      const std::vector<double>& grid,
                                      const std::vector<std::uint64_t>& seeds,
                                      int jobs = 1);

// Indices of points not Pareto-dominated in (tail, head); ties kept.
std::vector<std::size_t> pareto_front(const std::vector<ParetoPoint>& points);

void mark_front(std::vector<ParetoPoint>& points);

void write_pareto_csv(const std::vector<ParetoPoint>& points,
                      const std::string& path);

struct DropRateAudit {
  struct PerBin {
    double empirical = 1.0;
    double expected = 1.0;
    long samples = 0;
    bool flagged = false;  // |empirical - expected| > 0.02 at >= 10k samples
  };
  PerBin bins[3];  // indexed by Bin
};

DropRateAudit drop_rate_audit(const TrainLog& log);

void write_grad_origin_csv(const GradientLedger& ledger, const CategoryTable& table,
                           const std::string& path);
void write_bg_scores_csv(const std::vector<double>& early,
                         const std::vector<double>& late,
                         const CategoryTable& table, const std::string& path);
void write_trainlog_csv(const TrainLog& log, const std::string& path);

}  // namespace droploss
