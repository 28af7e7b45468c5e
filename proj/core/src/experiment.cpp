#include "droploss/experiment.hpp"

#include <filesystem>
#include <fstream>

#include "droploss/csv.hpp"
#include "droploss/metrics.hpp"

namespace droploss {

namespace {

namespace fs = std::filesystem;

Eigen::MatrixXd background_features(const ProposalPool& pool) {
  Eigen::MatrixXd bg(pool.bg_rows.size(), pool.features.cols());
  for (std::size_t i = 0; i < pool.bg_rows.size(); ++i)
    bg.row(i) = pool.features.row(pool.bg_rows[i]);
  return bg;
}

void write_drop_audit_csv(const DropRateAudit& audit, const std::string& path) {
  csv::Writer out(path);
  out.row({"bin", "empirical", "expected", "samples", "flagged"});
  const char* names[3] = {"rare", "common", "frequent"};
  for (int b = 0; b < 3; ++b)
    out.row({names[b], csv::format(audit.bins[b].empirical),
             csv::format(audit.bins[b].expected),
             std::to_string(audit.bins[b].samples),
             audit.bins[b].flagged ? "1" : "0"});
}

}  // namespace

void run_train_experiment(const ExperimentConfig& config, std::uint64_t seed,
                          const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_config(config, seed, (dir / "run_config.txt").string());

  ProposalPool pool = build_train_pool(config, seed);
  TrainResult result = train(pool, pool.table, config.loss, config.schedule, seed);
  write_trainlog_csv(result.log, (dir / "trainlog.csv").string());
  write_params_csv(result.params, (dir / "params.csv").string());
  write_params_csv(result.log.early_params, (dir / "params_early.csv").string());
  write_drop_audit_csv(drop_rate_audit(result.log), (dir / "drop_audit.csv").string());

  ProposalPool eval_pool = build_eval_pool(config, seed);
  EvalReport report = evaluate(result.params, eval_pool, pool.table,
                               config.eval_threshold);
  write_eval_csv(report, pool.table, (dir / "eval.csv").string());

  if (config.loss.kind != LossKind::kSoftmax) {
    write_grad_origin_csv(result.log.ledger, pool.table,
                          (dir / "grad_origin.csv").string());
    Eigen::MatrixXd bg = background_features(eval_pool);
    auto early = bg_score_profile(result.log.early_params, bg, pool.table);
    auto late = bg_score_profile(result.params, bg, pool.table);
    write_bg_scores_csv(early, late, pool.table, (dir / "bg_scores.csv").string());
  }
}

void run_sweep_experiment(const ExperimentConfig& config, LossKind family,
                          const std::vector<double>& grid,
                          const std::vector<std::uint64_t>& seeds, int jobs,
                          const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto points = pareto_sweep(config, family, grid, seeds, jobs);
  mark_front(points);
  write_pareto_csv(points, (fs::path(out_dir) / "pareto.csv").string());
}

void run_diagnose(const std::string& run_dir) {
  const fs::path dir(run_dir);
  ExperimentConfig config = load_config((dir / "run_config.txt").string());
  if (config.seeds.size() != 1)
    throw std::runtime_error("run_diagnose: run_config.txt must carry one seed");
  const std::uint64_t seed = config.seeds[0];

  ClassifierParams params = read_params_csv((dir / "params.csv").string());
  ProposalPool train_pool = build_train_pool(config, seed);
  ProposalPool eval_pool = build_eval_pool(config, seed);
  EvalReport report = evaluate(params, eval_pool, train_pool.table,
                               config.eval_threshold);
  write_eval_csv(report, train_pool.table, (dir / "eval.csv").string());

  if (config.loss.kind != LossKind::kSoftmax) {
    ClassifierParams early = read_params_csv((dir / "params_early.csv").string());
    Eigen::MatrixXd bg = background_features(eval_pool);
    write_bg_scores_csv(bg_score_profile(early, bg, train_pool.table),
                        bg_score_profile(params, bg, train_pool.table),
                        train_pool.table, (dir / "bg_scores.csv").string());
  }
}

}  // namespace droploss
