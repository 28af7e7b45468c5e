#pragma once

#include <string>
#include <vector>

#include "droploss/config.hpp"
#include "droploss/diagnostics.hpp"

namespace droploss {

// Trains one model and writes the run directory:
//   run_config.txt  config echo with the seed (diagnose re-reads it)
//   trainlog.csv    per-iteration loss/lr/keep statistics
//   eval.csv        per-category and summary metrics
//   grad_origin.csv cumulative gradient-origin fractions (sigmoid family)
//   bg_scores.csv   early/late background score profile (sigmoid family)
//   drop_audit.csv  per-bin empirical vs expected keep rates
//   params.csv, params_early.csv
void run_train_experiment(const ExperimentConfig& config, std::uint64_t seed,
                          const std::string& out_dir);

// Runs pareto_sweep for one family and writes pareto.csv with front flags.
void run_sweep_experiment(const ExperimentConfig& config, LossKind family,
                          const std::vector<double>& grid,
                          const std::vector<std::uint64_t>& seeds, int jobs,
                          const std::string& out_dir);

// Recomputes eval.csv and bg_scores.csv from an existing run directory using
// the saved config echo and parameter dumps; training artifacts untouched.
void run_diagnose(const std::string& run_dir);

}  // namespace droploss
