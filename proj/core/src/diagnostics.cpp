#include "droploss/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "droploss/csv.hpp"

namespace droploss {

double GradientLedger::total() const {
  double t = 0.0;
  for (int j = 0; j < num_categories(); ++j)
    t += encouraging[j] + bg_discouraging[j] + fg_mis_discouraging[j];
  return t;
}

void account_gradients(const LogitsBatch& batch, const Eigen::MatrixXd& grad,
                       GradientLedger& ledger) {
  const int c = ledger.num_categories();
  if (grad.cols() != c || grad.rows() != static_cast<Eigen::Index>(batch.labels.size()))
    throw std::invalid_argument("account_gradients: shape mismatch");
  for (int j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < grad.rows(); ++i) {
      const double mag = std::abs(grad(i, j));
      const int label = batch.labels[i];
      if (label == j)
        ledger.encouraging[j] += mag;
      else if (label == kBackground)
        ledger.bg_discouraging[j] += mag;
      else
        ledger.fg_mis_discouraging[j] += mag;
    }
  }
}

double bg_origin_fraction(const GradientLedger& ledger, int category) {
  const double denom = ledger.bg_discouraging[category] +
                       ledger.fg_mis_discouraging[category];
  if (denom == 0.0) return -1.0;
  return ledger.bg_discouraging[category] / denom;
}

std::vector<double> bg_score_profile(const ClassifierParams& params,
                                     const Eigen::MatrixXd& bg_features,
                                     const CategoryTable& table) {
  const int c = table.num_categories();
  if (params.out_dim() != c)
    throw std::invalid_argument("bg_score_profile: sigmoid model required");
  if (bg_features.rows() == 0)
    throw std::invalid_argument("bg_score_profile: no background samples");
  Eigen::MatrixXd logits = forward(params, bg_features);
  std::vector<double> mean(c, 0.0);
  for (int j = 0; j < c; ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) sum += sigmoid(logits(i, j));
    mean[j] = sum / static_cast<double>(logits.rows());
  }
  return mean;
}

std::vector<int> frequency_rank_order(const CategoryTable& table) {
  std::vector<int> order(table.num_categories());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&table](int a, int b) {
    return table.frequency(a) > table.frequency(b);
  });
  return order;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LossSpec spec_for(const LossSpec& base, LossKind family, double param) {
  LossSpec spec = base;
  spec.kind = family;
  if (family == LossKind::kBeql) spec.beql_base = param;
  if (family == LossKind::kFixedDrop) spec.keep_prob = param;
  return spec;
}

bool has_parameter(LossKind family) {
  return family == LossKind::kBeql || family == LossKind::kFixedDrop;
}

}  // namespace

std::vector<ParetoPoint> pareto_sweep(const ExperimentConfig& base_config,
                                      LossKind family,
                                      const std::vector<double>& grid,
                                      const std::vector<std::uint64_t>& seeds,
                                      int jobs) {
  if (seeds.empty()) throw std::invalid_argument("pareto_sweep: no seeds");
  std::vector<double> params = grid;
  if (!has_parameter(family)) params = {0.0};
  if (params.empty())
    throw std::invalid_argument("pareto_sweep: empty grid for parameterized family");

  std::vector<ParetoPoint> points(params.size());
  std::atomic<std::size_t> next{0};
  auto run_point = [&](std::size_t idx) {
    ParetoPoint& point = points[idx];
    point.family = loss_name(family);
    point.param = params[idx];
    point.seed_count = static_cast<int>(seeds.size());
    std::vector<double> tails, heads, overalls;
    for (std::uint64_t seed : seeds) {
      try {
        ProposalPool pool = build_train_pool(base_config, seed);
        LossSpec spec = spec_for(base_config.loss, family, params[idx]);
        TrainResult result = train(pool, pool.table, spec, base_config.schedule, seed);
        ProposalPool eval_pool = build_eval_pool(base_config, seed);
        EvalReport report = evaluate(result.params, eval_pool, pool.table,
                                     base_config.eval_threshold);
        tails.push_back(report.tail_metric());
        heads.push_back(report.head_metric());
        overalls.push_back(report.macro_mean_recall);
      } catch (const TrainingDiverged&) {
        point.failed = true;
      }
    }
    if (tails.empty()) {
      point.failed = true;
      return;
    }
    point.tail = median(tails);
    point.head = median(heads);
    point.overall = median(overalls);
  };

  if (jobs <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::vector<std::thread> workers;
    const int width = std::min<std::size_t>(jobs, points.size());
    for (int w = 0; w < width; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < points.size();
             i = next.fetch_add(1))
          run_point(i);
      });
    for (auto& t : workers) t.join();
  }
  return points;
}

std::vector<std::size_t> pareto_front(const std::vector<ParetoPoint>& points) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!points[i].failed) order.push_back(i);
  std::sort(order.begin(), order.end(), [&points](std::size_t a, std::size_t b) {
    if (points[a].tail != points[b].tail) return points[a].tail > points[b].tail;
    return points[a].head > points[b].head;
  });

  // Single sweep over tail-descending groups; a point survives unless some
  // strictly-better-tail point has head >= its own, or an equal-tail point has
  // strictly greater head.
  std::vector<std::size_t> front;
  double best_head_above = -std::numeric_limits<double>::infinity();
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t end = g;
    double group_max_head = -std::numeric_limits<double>::infinity();
    while (end < order.size() && points[order[end]].tail == points[order[g]].tail) {
      group_max_head = std::max(group_max_head, points[order[end]].head);
      ++end;
    }
    for (std::size_t k = g; k < end; ++k) {
      const double head = points[order[k]].head;
      if (best_head_above >= head) continue;
      if (group_max_head > head) continue;
      front.push_back(order[k]);
    }
    best_head_above = std::max(best_head_above, group_max_head);
    g = end;
  }
  std::sort(front.begin(), front.end());
  return front;
}

void mark_front(std::vector<ParetoPoint>& points) {
  for (auto& p : points) p.on_front = false;
  for (std::size_t idx : pareto_front(points)) points[idx].on_front = true;
}

void write_pareto_csv(const std::vector<ParetoPoint>& points,
                      const std::string& path) {
  csv::Writer out(path);
  out.row({"family", "param", "seed_count", "tail", "head", "overall", "on_front",
           "failed"});
  for (const auto& p : points)
    out.row({p.family, csv::format(p.param), std::to_string(p.seed_count),
             csv::format(p.tail), csv::format(p.head), csv::format(p.overall),
             p.on_front ? "1" : "0", p.failed ? "1" : "0"});
}

DropRateAudit drop_rate_audit(const TrainLog& log) {
  DropRateAudit audit;
  double kept[3] = {0, 0, 0};
  long total[3] = {0, 0, 0};
  double expected_mass[3] = {0, 0, 0};
  for (const auto& rec : log.rows) {
    for (int b = 0; b < 3; ++b) {
      kept[b] += rec.kept[b];
      total[b] += rec.total[b];
      const double mu = (b == static_cast<int>(Bin::kFrequent)) ? rec.mu_freq
                                                                : rec.mu_tail;
      expected_mass[b] += mu * rec.total[b];
    }
  }
  for (int b = 0; b < 3; ++b) {
    auto& out = audit.bins[b];
    out.samples = total[b];
    if (total[b] == 0) continue;
    out.empirical = kept[b] / total[b];
    out.expected = expected_mass[b] / total[b];
    out.flagged = total[b] >= 10000 && std::abs(out.empirical - out.expected) > 0.02;
  }
  return audit;
}

void write_grad_origin_csv(const GradientLedger& ledger, const CategoryTable& table,
                           const std::string& path) {
  csv::Writer out(path);
  out.row({"category", "bin", "bg_fraction"});
  for (int j = 0; j < table.num_categories(); ++j) {
    const double frac = bg_origin_fraction(ledger, j);
    if (frac < 0.0) continue;  // zero discouraging mass: omitted
    out.row({std::to_string(j), bin_name(table.bin(j)), csv::format(frac)});
  }
}

void write_bg_scores_csv(const std::vector<double>& early,
                         const std::vector<double>& late,
                         const CategoryTable& table, const std::string& path) {
  if (early.size() != late.size() ||
      static_cast<int>(early.size()) != table.num_categories())
    throw std::invalid_argument("write_bg_scores_csv: size mismatch");
  csv::Writer out(path);
  out.row({"category", "freq_rank", "early_mean", "late_mean"});
  std::vector<int> rank(table.num_categories());
  auto order = frequency_rank_order(table);
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
  for (int r = 0; r < static_cast<int>(order.size()); ++r) {
    const int j = order[r];
    out.row({std::to_string(j), std::to_string(r), csv::format(early[j]),
             csv::format(late[j])});
  }
}

void write_trainlog_csv(const TrainLog& log, const std::string& path) {
  csv::Writer out(path);
  out.row({"iteration", "loss", "lr", "mu_tail", "mu_freq", "kept_rare",
           "total_rare", "kept_common", "total_common", "kept_frequent",
           "total_frequent", "fg_rare", "fg_common", "fg_frequent"});
  for (const auto& r : log.rows)
    out.row({std::to_string(r.iteration), csv::format(r.loss), csv::format(r.lr),
             csv::format(r.mu_tail), csv::format(r.mu_freq), csv::format(r.kept[0]),
             std::to_string(r.total[0]), csv::format(r.kept[1]),
             std::to_string(r.total[1]), csv::format(r.kept[2]),
             std::to_string(r.total[2]), std::to_string(r.fg_occ[0]),
             std::to_string(r.fg_occ[1]), std::to_string(r.fg_occ[2])});
}

}  // namespace droploss
