#include "droploss/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "droploss/csv.hpp"

namespace droploss {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(line, "expected a number, got '" + v + "'");
  }
}

long parse_long(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    long n = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return n;
  } catch (const std::exception&) {
    throw ConfigError(line, "expected an integer, got '" + v + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string raw;
  int line = 0;
  bool lambda_explicit = false;
  while (std::getline(in, raw)) {
    ++line;
    std::string text = raw;
    if (auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (value.empty()) throw ConfigError(line, "empty value for " + key);

    if (key == "synth.num_categories") cfg.synth.num_categories = static_cast<int>(parse_long(value, line));
    else if (key == "synth.zipf_exponent") cfg.synth.zipf_exponent = parse_double(value, line);
    else if (key == "synth.feature_dim") cfg.synth.feature_dim = static_cast<int>(parse_long(value, line));
    else if (key == "synth.fg_noise_sigma") cfg.synth.fg_noise_sigma = parse_double(value, line);
    else if (key == "synth.near_miss_sigma") cfg.synth.near_miss_sigma = parse_double(value, line);
    else if (key == "synth.near_miss_fraction") cfg.synth.near_miss_fraction = parse_double(value, line);
    else if (key == "synth.proto_overlap") cfg.synth.proto_overlap = parse_double(value, line);
    else if (key == "synth.dataset_size") cfg.synth.dataset_size = parse_long(value, line);
    else if (key == "synth.fg_fraction") cfg.synth.fg_fraction = parse_double(value, line);
    else if (key == "synth.counts_mode") {
      if (value != "binned" && value != "zipf")
        throw ConfigError(line, "counts_mode must be binned or zipf");
      cfg.counts_mode = value;
    } else if (key == "loss.rule") {
      try {
        cfg.loss.kind = loss_from_name(value);
      } catch (const std::exception& e) {
        throw ConfigError(line, e.what());
      }
    } else if (key == "loss.beql_base") cfg.loss.beql_base = parse_double(value, line);
    else if (key == "loss.keep_prob") cfg.loss.keep_prob = parse_double(value, line);
    else if (key == "loss.lambda_mode") {
      if (value == "bin_aligned") cfg.synth.lambda_mode = LambdaMode::kBinAligned;
      else if (value == "explicit") cfg.synth.lambda_mode = LambdaMode::kExplicit;
      else throw ConfigError(line, "lambda_mode must be bin_aligned or explicit");
    } else if (key == "loss.lambda") {
      cfg.synth.lambda = parse_double(value, line);
      lambda_explicit = true;
    } else if (key == "train.iterations") cfg.schedule.iterations = static_cast<int>(parse_long(value, line));
    else if (key == "train.base_lr") cfg.schedule.base_lr = parse_double(value, line);
    else if (key == "train.decay_factor") cfg.schedule.decay_factor = parse_double(value, line);
    else if (key == "train.milestone1") cfg.schedule.milestone1 = parse_double(value, line);
    else if (key == "train.milestone2") cfg.schedule.milestone2 = parse_double(value, line);
    else if (key == "train.momentum") cfg.schedule.momentum = parse_double(value, line);
    else if (key == "train.weight_decay") cfg.schedule.weight_decay = parse_double(value, line);
    else if (key == "train.batch_size") cfg.schedule.batch_size = static_cast<int>(parse_long(value, line));
    else if (key == "train.snapshot_every") cfg.schedule.snapshot_every = static_cast<int>(parse_long(value, line));
    else if (key == "train.hidden_dim") cfg.schedule.hidden_dim = static_cast<int>(parse_long(value, line));
    else if (key == "eval.threshold") cfg.eval_threshold = parse_double(value, line);
    else if (key == "eval.per_category") cfg.eval_per_category = static_cast<int>(parse_long(value, line));
    else if (key == "eval.bg_size") cfg.eval_bg_size = parse_long(value, line);
    else if (key == "seeds") {
      cfg.seeds.clear();
      std::istringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        cfg.seeds.push_back(static_cast<std::uint64_t>(parse_long(trim(item), line)));
      if (cfg.seeds.empty()) throw ConfigError(line, "empty seeds list");
    } else if (key == "output.dir") cfg.out_dir = value;
    else throw ConfigError(line, "unknown key '" + key + "'");

    if (lambda_explicit && cfg.synth.lambda_mode == LambdaMode::kBinAligned)
      cfg.synth.lambda_mode = LambdaMode::kExplicit;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return parse_config(in);
}

ProposalPool build_train_pool(const ExperimentConfig& config, std::uint64_t seed) {
  SynthConfig synth = config.synth;
  synth.seed = seed;
  synth.pool_stream = 0;
  if (config.counts_mode == "binned") {
    if (synth.num_categories % 3 != 0)
      throw std::invalid_argument(
          "binned counts mode requires num_categories divisible by 3");
    const long total_fg = std::lround(synth.dataset_size * synth.fg_fraction);
    synth.category_counts =
        long_tail_binned_counts(synth.num_categories / 3, total_fg);
  }
  return generate_pool(synth);
}

ProposalPool build_eval_pool(const ExperimentConfig& config, std::uint64_t seed) {
  SynthConfig synth = config.synth;
  synth.seed = seed;
  synth.pool_stream = 1;
  synth.category_counts.assign(synth.num_categories, config.eval_per_category);
  synth.dataset_size = static_cast<long>(synth.num_categories) *
                           config.eval_per_category + config.eval_bg_size;
  return generate_pool(synth);
}

void write_config(const ExperimentConfig& cfg, std::uint64_t seed,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config echo " + path);
  out << "synth.num_categories = " << cfg.synth.num_categories << "\n";
  out << "synth.zipf_exponent = " << csv::format(cfg.synth.zipf_exponent) << "\n";
  out << "synth.feature_dim = " << cfg.synth.feature_dim << "\n";
  out << "synth.fg_noise_sigma = " << csv::format(cfg.synth.fg_noise_sigma) << "\n";
  out << "synth.near_miss_sigma = " << csv::format(cfg.synth.near_miss_sigma) << "\n";
  out << "synth.near_miss_fraction = " << csv::format(cfg.synth.near_miss_fraction) << "\n";
  out << "synth.proto_overlap = " << csv::format(cfg.synth.proto_overlap) << "\n";
  out << "synth.dataset_size = " << cfg.synth.dataset_size << "\n";
  out << "synth.fg_fraction = " << csv::format(cfg.synth.fg_fraction) << "\n";
  out << "synth.counts_mode = " << cfg.counts_mode << "\n";
  out << "loss.rule = " << loss_name(cfg.loss.kind) << "\n";
  out << "loss.beql_base = " << csv::format(cfg.loss.beql_base) << "\n";
  out << "loss.keep_prob = " << csv::format(cfg.loss.keep_prob) << "\n";
  out << "loss.lambda_mode = "
      << (cfg.synth.lambda_mode == LambdaMode::kBinAligned ? "bin_aligned" : "explicit")
      << "\n";
  if (cfg.synth.lambda_mode == LambdaMode::kExplicit)
    out << "loss.lambda = " << csv::format(cfg.synth.lambda) << "\n";
  out << "train.iterations = " << cfg.schedule.iterations << "\n";
  out << "train.base_lr = " << csv::format(cfg.schedule.base_lr) << "\n";
  out << "train.decay_factor = " << csv::format(cfg.schedule.decay_factor) << "\n";
  out << "train.milestone1 = " << csv::format(cfg.schedule.milestone1) << "\n";
  out << "train.milestone2 = " << csv::format(cfg.schedule.milestone2) << "\n";
  out << "train.momentum = " << csv::format(cfg.schedule.momentum) << "\n";
  out << "train.weight_decay = " << csv::format(cfg.schedule.weight_decay) << "\n";
  out << "train.batch_size = " << cfg.schedule.batch_size << "\n";
  out << "train.snapshot_every = " << cfg.schedule.snapshot_every << "\n";
  out << "train.hidden_dim = " << cfg.schedule.hidden_dim << "\n";
  out << "eval.threshold = " << csv::format(cfg.eval_threshold) << "\n";
  out << "eval.per_category = " << cfg.eval_per_category << "\n";
  out << "eval.bg_size = " << cfg.eval_bg_size << "\n";
  out << "seeds = " << seed << "\n";
}

}  // namespace droploss
