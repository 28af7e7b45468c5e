#include "droploss/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "droploss/csv.hpp"
#include "droploss/losses.hpp"

namespace droploss {

namespace {

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t substream = 0) {
  std::seed_seq seq{seed, stream, substream};
  return std::mt19937_64(seq);
}

void validate(const SynthConfig& c) {
  if (c.num_categories < 1) throw std::invalid_argument("SynthConfig: num_categories < 1");
  if (c.feature_dim < 1) throw std::invalid_argument("SynthConfig: feature_dim < 1");
  if (c.zipf_exponent < 0.0) throw std::invalid_argument("SynthConfig: zipf_exponent < 0");
  if (c.near_miss_sigma <= c.fg_noise_sigma)
    throw std::invalid_argument("SynthConfig: near_miss_sigma must exceed fg_noise_sigma");
  if (c.near_miss_fraction < 0.0 || c.near_miss_fraction > 1.0)
    throw std::invalid_argument("SynthConfig: near_miss_fraction outside [0,1]");
  if (c.fg_fraction < 0.0 || c.fg_fraction > 1.0)
    throw std::invalid_argument("SynthConfig: fg_fraction outside [0,1]");
  if (c.dataset_size < 1) throw std::invalid_argument("SynthConfig: dataset_size < 1");
  if (!c.category_counts.empty() &&
      c.category_counts.size() != static_cast<std::size_t>(c.num_categories))
    throw std::invalid_argument("SynthConfig: category_counts length != num_categories");
}

Eigen::VectorXd random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  double norm = v.norm();
  if (norm == 0.0) v(0) = norm = 1.0;
  return v / norm;
}

// Unit-norm prototypes sharing a common direction with strength proto_overlap.
// Depends only on (seed, num_categories, feature_dim), so pools drawn with
// different instance streams see identical prototypes.
std::vector<Eigen::VectorXd> draw_prototypes(const SynthConfig& c) {
  auto rng = seeded_rng(c.seed, /*stream=*/1);
  Eigen::VectorXd shared = random_unit(c.feature_dim, rng);
  std::vector<Eigen::VectorXd> protos;
  protos.reserve(c.num_categories);
  for (int j = 0; j < c.num_categories; ++j) {
    Eigen::VectorXd v = random_unit(c.feature_dim, rng);
    Eigen::VectorXd p = c.proto_overlap * shared + v;
    protos.push_back(p / p.norm());
  }
  return protos;
}

// Inverse-CDF categorical draw; keeps the instance stream portable across
// standard library implementations of discrete_distribution.
int draw_category(const std::vector<double>& cdf, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) return static_cast<int>(cdf.size()) - 1;
  return static_cast<int>(it - cdf.begin());
}

}  // namespace

std::vector<double> zipf_category_distribution(int num_categories, double exponent) {
  if (num_categories < 1) throw std::invalid_argument("zipf: num_categories < 1");
  if (exponent < 0.0) throw std::invalid_argument("zipf: negative exponent");
  std::vector<double> p(num_categories);
  double total = 0.0;
  for (int k = 0; k < num_categories; ++k) {
    p[k] = std::pow(static_cast<double>(k + 1), -exponent);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;  // already descending
}

std::vector<std::int64_t> long_tail_binned_counts(int per_bin, long total_fg) {
  if (per_bin < 1) throw std::invalid_argument("long_tail_binned_counts: per_bin < 1");
  std::vector<std::int64_t> counts;
  counts.reserve(3 * per_bin);

  // Rare: counts spread over 1..10, common: geometric 12..95.
  std::vector<std::int64_t> rare(per_bin), common(per_bin);
  for (int i = 0; i < per_bin; ++i) {
    double t = per_bin == 1 ? 0.0 : static_cast<double>(i) / (per_bin - 1);
    rare[i] = static_cast<std::int64_t>(std::llround(10.0 - 9.0 * t));
    common[i] = static_cast<std::int64_t>(std::llround(95.0 * std::pow(12.0 / 95.0, t)));
  }
  long tail_mass = std::accumulate(rare.begin(), rare.end(), 0L) +
                   std::accumulate(common.begin(), common.end(), 0L);
  long frequent_mass = total_fg - tail_mass;
  if (frequent_mass < 101L * per_bin)
    throw std::invalid_argument("long_tail_binned_counts: total_fg too small for frequent bin");

  // Frequent: power-law shape scaled to the remaining mass, floored above the
  // common/frequent boundary.
  std::vector<double> shape(per_bin);
  double shape_total = 0.0;
  for (int i = 0; i < per_bin; ++i) {
    shape[i] = std::pow(static_cast<double>(i + 1), -0.4);
    shape_total += shape[i];
  }
  std::vector<std::int64_t> frequent(per_bin);
  long assigned = 0;
  for (int i = 0; i < per_bin; ++i) {
    frequent[i] = std::max<std::int64_t>(
        101, static_cast<std::int64_t>(std::llround(frequent_mass * shape[i] / shape_total)));
    assigned += frequent[i];
  }
  frequent[0] += frequent_mass - assigned;  // absorb rounding in the head
  if (frequent[0] < 101)
    throw std::invalid_argument("long_tail_binned_counts: head category underflow");

  counts.insert(counts.end(), frequent.begin(), frequent.end());
  counts.insert(counts.end(), common.begin(), common.end());
  counts.insert(counts.end(), rare.begin(), rare.end());
  return counts;
}

ProposalPool generate_pool(const SynthConfig& config) {
  validate(config);
  const int c = config.num_categories;
  const int d = config.feature_dim;
  auto protos = draw_prototypes(config);
  auto rng = seeded_rng(config.seed, /*stream=*/2, config.pool_stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_cat(0, c - 1);

  // Foreground labels.
  std::vector<int> fg_labels;
  if (!config.category_counts.empty()) {
    for (int j = 0; j < c; ++j)
      for (std::int64_t k = 0; k < config.category_counts[j]; ++k) fg_labels.push_back(j);
  } else {
    const long n_fg = std::lround(config.dataset_size * config.fg_fraction);
    auto p = zipf_category_distribution(c, config.zipf_exponent);
    std::vector<double> cdf(p.size());
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    fg_labels.reserve(n_fg);
    for (long i = 0; i < n_fg; ++i) fg_labels.push_back(draw_category(cdf, rng));
  }
  const long n_fg = static_cast<long>(fg_labels.size());
  const long n_bg = config.dataset_size - n_fg;
  if (n_bg < 0)
    throw std::invalid_argument("generate_pool: dataset_size smaller than foreground counts");

  ProposalPool pool;
  pool.features.resize(n_fg + n_bg, d);
  pool.labels.reserve(n_fg + n_bg);
  for (long i = 0; i < n_fg; ++i) {
    const int label = fg_labels[i];
    for (int k = 0; k < d; ++k)
      pool.features(i, k) = protos[label](k) + config.fg_noise_sigma * normal(rng);
    pool.labels.push_back(label);
    pool.fg_rows.push_back(static_cast<int>(i));
  }
  for (long i = n_fg; i < n_fg + n_bg; ++i) {
    if (unit(rng) < config.near_miss_fraction) {
      const int near = any_cat(rng);
      for (int k = 0; k < d; ++k)
        pool.features(i, k) = protos[near](k) + config.near_miss_sigma * normal(rng);
    } else {
      for (int k = 0; k < d; ++k) pool.features(i, k) = normal(rng);
    }
    pool.labels.push_back(kBackground);
    pool.bg_rows.push_back(static_cast<int>(i));
  }

  std::vector<std::int64_t> hist(c, 0);
  for (int label : fg_labels) ++hist[label];
  pool.table = CategoryTable::from_counts(hist, config.lambda_mode, config.lambda);
  return pool;
}

ProposalBatch sample_batch(const ProposalPool& pool, int batch_size,
                           std::mt19937_64& rng) {
  if (batch_size <= 0 || batch_size % 4 != 0)
    throw std::invalid_argument("sample_batch: batch_size must be a positive multiple of 4");
  const int want_fg = batch_size / 4;
  const int want_bg = batch_size - want_fg;
  if (static_cast<int>(pool.fg_rows.size()) < want_fg ||
      static_cast<int>(pool.bg_rows.size()) < want_bg)
    throw std::runtime_error("sample_batch: pool subset smaller than requested");

  // Without replacement, via partial Fisher-Yates over index copies.
  auto draw = [&rng](const std::vector<int>& rows, int k) {
    std::vector<int> idx = rows;
    std::uniform_int_distribution<std::size_t> pick;
    for (int i = 0; i < k; ++i) {
      std::size_t j = i + pick(rng, decltype(pick)::param_type(0, idx.size() - 1 - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  };
  std::vector<int> chosen = draw(pool.fg_rows, want_fg);
  std::vector<int> bg = draw(pool.bg_rows, want_bg);
  chosen.insert(chosen.end(), bg.begin(), bg.end());
  std::shuffle(chosen.begin(), chosen.end(), rng);

  ProposalBatch batch;
  batch.features.resize(batch_size, pool.features.cols());
  batch.labels.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    batch.features.row(i) = pool.features.row(chosen[i]);
    batch.labels.push_back(pool.labels[chosen[i]]);
  }
  return batch;
}

ProposalPool repeat_factor_resample(const ProposalPool& pool, double threshold,
                                    std::mt19937_64& rng) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw std::invalid_argument("repeat_factor_resample: threshold outside (0,1]");
  const int c = pool.table.num_categories();
  std::vector<double> repeat(c, 1.0);
  for (int j = 0; j < c; ++j) {
    double f = pool.table.frequency(j);
    if (f > 0.0) repeat[j] = std::max(1.0, std::sqrt(threshold / f));
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> copies(pool.size(), 1);
  long extra = 0;
  for (long i = 0; i < pool.size(); ++i) {
    const int label = pool.labels[i];
    if (label == kBackground) continue;
    const double r = repeat[label];
    int n = static_cast<int>(std::floor(r));
    if (unit(rng) < r - n) ++n;
    copies[i] = std::max(1, n);
    extra += copies[i] - 1;
  }

  ProposalPool out;
  out.features.resize(pool.size() + extra, pool.features.cols());
  out.labels.reserve(pool.size() + extra);
  // Originals keep their order; replicas are appended.
  for (long i = 0; i < pool.size(); ++i) {
    out.features.row(out.labels.size()) = pool.features.row(i);
    out.labels.push_back(pool.labels[i]);
  }
  for (long i = 0; i < pool.size(); ++i) {
    for (int k = 1; k < copies[i]; ++k) {
      out.features.row(out.labels.size()) = pool.features.row(i);
      out.labels.push_back(pool.labels[i]);
    }
  }
  std::vector<std::int64_t> hist(c, 0);
  for (long i = 0; i < out.size(); ++i) {
    if (out.labels[i] == kBackground)
      out.bg_rows.push_back(static_cast<int>(i));
    else {
      out.fg_rows.push_back(static_cast<int>(i));
      ++hist[out.labels[i]];
    }
  }
  out.table = CategoryTable::from_counts(hist, LambdaMode::kBinAligned);
  return out;
}

void write_pool_csv(const ProposalPool& pool, const std::string& path) {
  csv::Writer out(path);
  std::vector<std::string> header;
  for (int k = 0; k < pool.features.cols(); ++k) header.push_back("f" + std::to_string(k));
  header.push_back("label");
  out.row(header);
  for (long i = 0; i < pool.size(); ++i) {
    std::vector<std::string> row;
    for (int k = 0; k < pool.features.cols(); ++k)
      row.push_back(csv::format(pool.features(i, k)));
    row.push_back(std::to_string(pool.labels[i]));
    out.row(row);
  }
}

ProposalPool read_pool_csv(const std::string& path, LambdaMode mode, double lambda) {
  auto rows = csv::read(path);
  if (rows.size() < 2) throw std::runtime_error("read_pool_csv: no data rows in " + path);
  const int d = static_cast<int>(rows[0].size()) - 1;
  if (d < 1 || rows[0].back() != "label")
    throw std::runtime_error("read_pool_csv: bad header in " + path);
  const long n = static_cast<long>(rows.size()) - 1;

  ProposalPool pool;
  pool.features.resize(n, d);
  pool.labels.reserve(n);
  int max_label = -1;
  for (long i = 0; i < n; ++i) {
    const auto& row = rows[i + 1];
    if (static_cast<int>(row.size()) != d + 1)
      throw std::runtime_error("read_pool_csv: ragged row in " + path);
    for (int k = 0; k < d; ++k) pool.features(i, k) = std::stod(row[k]);
    int label = std::stoi(row[d]);
    pool.labels.push_back(label);
    max_label = std::max(max_label, label);
    if (label == kBackground)
      pool.bg_rows.push_back(static_cast<int>(i));
    else
      pool.fg_rows.push_back(static_cast<int>(i));
  }
  if (max_label < 0) throw std::runtime_error("read_pool_csv: no foreground rows");
  std::vector<std::int64_t> hist(max_label + 1, 0);
  for (int label : pool.labels)
    if (label != kBackground) ++hist[label];
  pool.table = CategoryTable::from_counts(hist, mode, lambda);
  return pool;
}

}  // namespace droploss
