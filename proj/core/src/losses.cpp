#include "droploss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace droploss {

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

void check_batch(const LogitsBatch& batch, int num_categories) {
  if (batch.logits.rows() != static_cast<Eigen::Index>(batch.labels.size()))
    throw std::invalid_argument("LogitsBatch: logits rows != labels size");
  if (batch.logits.cols() != num_categories)
    throw std::invalid_argument("LogitsBatch: logits width mismatch");
  for (int label : batch.labels)
    if (label != kBackground && (label < 0 || label >= num_categories))
      throw std::invalid_argument("LogitsBatch: label out of range");
}

// Foreground rows share Eq.-style behavior across all rules: weight 0 only on
// non-target tail categories.
void fill_foreground_row(WeightMatrix& w, const LogitsBatch& batch,
                         const CategoryTable& table, int row) {
  int label = batch.labels[row];
  for (int j = 0; j < w.cols(); ++j)
    w(row, j) = (table.is_tail(j) && j != label) ? 0.0 : 1.0;
}

}  // namespace

LossResult weighted_bce(const LogitsBatch& batch, const WeightMatrix& weights) {
  if (weights.rows() != batch.logits.rows() || weights.cols() != batch.logits.cols())
    throw std::invalid_argument("weighted_bce: weight shape mismatch");
  const int n = static_cast<int>(batch.logits.rows());
  const int c = static_cast<int>(batch.logits.cols());
  check_batch(batch, c);
  if (n == 0) throw std::invalid_argument("weighted_bce: empty batch");

  LossResult result;
  result.grad.resize(n, c);
  double loss = 0.0;
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const int label = batch.labels[i];
    for (int j = 0; j < c; ++j) {
      const double w = weights(i, j);
      const double p = sigmoid(batch.logits(i, j));
      const double y = (j == label) ? 1.0 : 0.0;
      const double p_hat = (y == 1.0) ? p : 1.0 - p;
      loss -= w * std::log(std::max(p_hat, kProbClamp));
      result.grad(i, j) = w * (p - y) * inv_n;
    }
  }
  result.loss = loss * inv_n;
  return result;
}

WeightMatrix eql_weights(const LogitsBatch& batch, const CategoryTable& table) {
  check_batch(batch, table.num_categories());
  WeightMatrix w(batch.logits.rows(), batch.logits.cols());
  for (int i = 0; i < w.rows(); ++i) {
    if (batch.is_foreground(i)) {
      fill_foreground_row(w, batch, table, i);
    } else {
      w.row(i).setOnes();
    }
  }
  return w;
}

WeightMatrix beql_weights(const LogitsBatch& batch, const CategoryTable& table,
                          double base) {
  if (base <= 1.0) throw std::invalid_argument("beql_weights: base must be > 1");
  check_batch(batch, table.num_categories());
  const double log_base = std::log(base);
  WeightMatrix w(batch.logits.rows(), batch.logits.cols());
  for (int i = 0; i < w.rows(); ++i) {
    if (batch.is_foreground(i)) {
      fill_foreground_row(w, batch, table, i);
      continue;
    }
    for (int j = 0; j < w.cols(); ++j) {
      if (!table.is_tail(j)) {
        w(i, j) = 1.0;
        continue;
      }
      double p = sigmoid(batch.logits(i, j));
      p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
      w(i, j) = 1.0 - std::min(-std::log(p) / log_base, 1.0);
    }
  }
  return w;
}

BinOccurrences foreground_bin_counts(const std::vector<int>& labels,
                                     const CategoryTable& table) {
  BinOccurrences occ;
  for (int label : labels) {
    if (label == kBackground) continue;
    switch (table.bin(label)) {
      case Bin::kRare: ++occ.rare; break;
      case Bin::kCommon: ++occ.common; break;
      case Bin::kFrequent: ++occ.frequent; break;
    }
  }
  return occ;
}

MuPair droploss_mu(const BinOccurrences& occ, const CategoryTable& table) {
  if (occ.rare < 0 || occ.common < 0 || occ.frequent < 0)
    throw std::invalid_argument("droploss_mu: negative occurrence count");
  MuPair mu;
  const long all = occ.all();
  if (all > 0) {
    mu.tail = static_cast<double>(occ.rare + occ.common) / static_cast<double>(all);
    mu.freq = static_cast<double>(occ.frequent) / static_cast<double>(all);
  } else {
    mu.tail = table.tail_instance_fraction();
    mu.freq = 1.0 - mu.tail;
  }
  return mu;
}

namespace {

WeightMatrix bernoulli_background_weights(const LogitsBatch& batch,
                                          const CategoryTable& table,
                                          double tail_keep, double freq_keep,
                                          std::mt19937_64& rng) {
  check_batch(batch, table.num_categories());
  WeightMatrix w(batch.logits.rows(), batch.logits.cols());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < w.rows(); ++i) {
    if (batch.is_foreground(i)) {
      fill_foreground_row(w, batch, table, i);
      continue;
    }
    for (int j = 0; j < w.cols(); ++j) {
      const double keep = table.is_tail(j) ? tail_keep : freq_keep;
      w(i, j) = (unit(rng) < keep) ? 1.0 : 0.0;
    }
  }
  return w;
}

}  // namespace

WeightMatrix droploss_weights(const LogitsBatch& batch, const CategoryTable& table,
                              const MuPair& mu, std::mt19937_64& rng) {
  if (mu.tail < 0.0 || mu.tail > 1.0 || mu.freq < 0.0 || mu.freq > 1.0)
    throw std::invalid_argument("droploss_weights: mu outside [0,1]");
  return bernoulli_background_weights(batch, table, mu.tail, mu.freq, rng);
}

WeightMatrix fixed_drop_weights(const LogitsBatch& batch, const CategoryTable& table,
                                double keep_prob, std::mt19937_64& rng) {
  if (keep_prob < 0.0 || keep_prob > 1.0)
    throw std::invalid_argument("fixed_drop_weights: keep_prob outside [0,1]");
  return bernoulli_background_weights(batch, table, keep_prob, 1.0, rng);
}

LossResult softmax_ce(const LogitsBatch& batch, int expected_categories) {
  check_batch(batch, expected_categories + 1);
  const int n = static_cast<int>(batch.logits.rows());
  const int width = expected_categories + 1;
  if (n == 0) throw std::invalid_argument("softmax_ce: empty batch");

  LossResult result;
  result.grad.resize(n, width);
  double loss = 0.0;
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const int target = batch.is_foreground(i) ? batch.labels[i] : expected_categories;
    const double z_max = batch.logits.row(i).maxCoeff();
    double denom = 0.0;
    for (int j = 0; j < width; ++j) denom += std::exp(batch.logits(i, j) - z_max);
    for (int j = 0; j < width; ++j) {
      const double p = std::exp(batch.logits(i, j) - z_max) / denom;
      const double y = (j == target) ? 1.0 : 0.0;
      if (j == target) loss -= std::log(std::max(p, kProbClamp));
      result.grad(i, j) = (p - y) * inv_n;
    }
  }
  result.loss = loss * inv_n;
  return result;
}

const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kBce: return "bce";
    case LossKind::kSoftmax: return "softmax";
    case LossKind::kEql: return "eql";
    case LossKind::kBeql: return "beql";
    case LossKind::kDropLoss: return "droploss";
    case LossKind::kFixedDrop: return "fixed_drop";
  }
  return "?";
}

LossKind loss_from_name(const std::string& name) {
  if (name == "bce") return LossKind::kBce;
  if (name == "softmax") return LossKind::kSoftmax;
  if (name == "eql") return LossKind::kEql;
  if (name == "beql") return LossKind::kBeql;
  if (name == "droploss") return LossKind::kDropLoss;
  if (name == "fixed_drop") return LossKind::kFixedDrop;
  throw std::invalid_argument("unknown loss rule: " + name);
}

WeightMatrix make_weights(const LossSpec& spec, const LogitsBatch& batch,
                          const CategoryTable& table, std::mt19937_64& rng) {
  switch (spec.kind) {
    case LossKind::kBce:
      check_batch(batch, table.num_categories());
      return WeightMatrix::Ones(batch.logits.rows(), batch.logits.cols());
    case LossKind::kEql:
      return eql_weights(batch, table);
    case LossKind::kBeql:
      return beql_weights(batch, table, spec.beql_base);
    case LossKind::kDropLoss: {
      MuPair mu = droploss_mu(foreground_bin_counts(batch.labels, table), table);
      return droploss_weights(batch, table, mu, rng);
    }
    case LossKind::kFixedDrop:
      return fixed_drop_weights(batch, table, spec.keep_prob, rng);
    case LossKind::kSoftmax:
      throw std::invalid_argument("make_weights: softmax has no weight rule");
  }
  throw std::invalid_argument("make_weights: bad loss kind");
}

LossEval evaluate_loss(const LossSpec& spec, const LogitsBatch& batch,
                       const CategoryTable& table, std::mt19937_64& rng) {
  LossEval eval;
  if (spec.kind == LossKind::kSoftmax) {
    LossResult r = softmax_ce(batch, table.num_categories());
    eval.loss = r.loss;
    eval.grad = std::move(r.grad);
    return eval;
  }
  if (spec.kind == LossKind::kDropLoss)
    eval.mu = droploss_mu(foreground_bin_counts(batch.labels, table), table);
  else if (spec.kind == LossKind::kFixedDrop)
    eval.mu = MuPair{spec.keep_prob, 1.0};
  eval.weights = make_weights(spec, batch, table, rng);
  LossResult r = weighted_bce(batch, eval.weights);
  eval.loss = r.loss;
  eval.grad = std::move(r.grad);
  return eval;
}

}  // namespace droploss
