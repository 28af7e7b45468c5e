// Experiment runner: train / sweep / gradcheck / diagnose subcommands.
//
// Exit codes: 0 success, 1 gradcheck tolerance breach, 2 invalid config or
// arguments, 3 training diverged (non-finite loss).

#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "droploss/experiment.hpp"
#include "droploss/gradcheck.hpp"

namespace {

std::vector<double> parse_grid(const std::string& grid_spec) {
  std::vector<double> grid;
  std::istringstream ss(grid_spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    grid.push_back(std::stod(item));
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DropLoss long-tail classification experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, family_name, grid_spec, run_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  bool perturb = false;

  auto* train_cmd = app.add_subcommand("train", "train one model and write run artifacts");
  train_cmd->add_option("--config", config_path, "experiment config file")->required();
  train_cmd->add_option("--seed", seed, "experiment seed (overrides config seeds)");
  train_cmd->add_option("--out", out_dir, "output directory (overrides config)");

  auto* sweep_cmd = app.add_subcommand("sweep", "hyperparameter sweep for one loss family");
  sweep_cmd->add_option("--config", config_path, "experiment config file")->required();
  sweep_cmd->add_option("--family", family_name,
                        "bce|softmax|eql|beql|droploss|fixed_drop")->required();
  sweep_cmd->add_option("--grid", grid_spec, "comma-separated parameter grid");
  sweep_cmd->add_option("--jobs", jobs, "worker pool width (default 1)");
  sweep_cmd->add_option("--out", out_dir, "output directory (overrides config)");

  auto* gradcheck_cmd = app.add_subcommand("gradcheck",
                                           "finite-difference audit of all gradients");
  gradcheck_cmd->add_flag("--perturb", perturb,
                          "negative control: corrupt one gradient cell");

  auto* diagnose_cmd = app.add_subcommand("diagnose",
                                          "re-run diagnostics over a run directory");
  diagnose_cmd->add_option("--out", run_dir, "existing run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  seed_given = train_cmd->count("--seed") > 0;

  try {
    if (*train_cmd) {
      droploss::ExperimentConfig config = droploss::load_config(config_path);
      if (!out_dir.empty()) config.out_dir = out_dir;
      const std::uint64_t run_seed = seed_given ? seed : config.seeds.front();
      droploss::run_train_experiment(config, run_seed, config.out_dir);
      return 0;
    }
    if (*sweep_cmd) {
      droploss::ExperimentConfig config = droploss::load_config(config_path);
      if (!out_dir.empty()) config.out_dir = out_dir;
      droploss::LossKind family = droploss::loss_from_name(family_name);
      std::vector<double> grid = parse_grid(grid_spec);
      const bool parameterized = family == droploss::LossKind::kBeql ||
                                 family == droploss::LossKind::kFixedDrop;
      if (parameterized && grid.empty()) {
        std::fprintf(stderr, "error: family '%s' requires a non-empty --grid\n",
                     family_name.c_str());
        return 2;
      }
      droploss::run_sweep_experiment(config, family, grid, config.seeds, jobs,
                                     config.out_dir);
      return 0;
    }
    if (*gradcheck_cmd) {
      droploss::GradCheckReport report = droploss::run_gradcheck(perturb);
      for (const auto& entry : report.entries)
        std::printf("%-10s loss-level worst rel %.3e, model-level worst rel %.3e  [%s]\n",
                    entry.variant.c_str(), entry.worst_loss_rel,
                    entry.worst_model_rel, entry.pass ? "ok" : "FAIL");
      if (!report.pass) {
        for (const auto& entry : report.entries)
          if (!entry.pass)
            std::fprintf(stderr, "gradcheck failed: %s at %s\n",
                         entry.variant.c_str(), entry.worst_cell.c_str());
        return 1;
      }
      return 0;
    }
    if (*diagnose_cmd) {
      droploss::run_diagnose(run_dir);
      return 0;
    }
  } catch (const droploss::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const droploss::TrainingDiverged& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
