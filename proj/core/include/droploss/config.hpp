#pragma once

#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "droploss/losses.hpp"
#include "droploss/model.hpp"
#include "droploss/synth.hpp"

namespace droploss {

// Flat key-value experiment file with dotted section prefixes; the schema is
// documented in docs/config_schema.txt. Unknown keys are rejected.
struct ExperimentConfig {
  SynthConfig synth;                 // seed/pool_stream assigned per run
  std::string counts_mode = "binned";  // "binned" or "zipf"
  LossSpec loss;
  TrainSchedule schedule;
  double eval_threshold = 0.5;
  int eval_per_category = 50;
  long eval_bg_size = 4000;
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "run_out";
};

struct ConfigError : std::runtime_error {
  int line;
  ConfigError(int line_number, const std::string& message)
      : std::runtime_error("config line " + std::to_string(line_number) + ": " +
                           message),
        line(line_number) {}
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// Training pool for one run: binned mode constructs counts with
// num_categories/3 categories per bin; zipf mode samples labels from the
// Zipf law. Prototypes depend only on the seed, so the eval pool (uniform
// per-category counts, instance stream 1) shares them.
ProposalPool build_train_pool(const ExperimentConfig& config, std::uint64_t seed);
ProposalPool build_eval_pool(const ExperimentConfig& config, std::uint64_t seed);

// Echo used when writing a run directory, so diagnostics can rebuild the run.
void write_config(const ExperimentConfig& config, std::uint64_t seed,
                  const std::string& path);

}  // namespace droploss
