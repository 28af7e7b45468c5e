#include "droploss/gradcheck.hpp"

#include <cmath>
#include <random>

#include "droploss/losses.hpp"
#include "droploss/model.hpp"

namespace droploss {

namespace {

constexpr double kStep = 1e-5;
constexpr int kInstances = 5;

double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-3);
}

CategoryTable check_table() {
  // Covers all three bins; bin-aligned lambda selects the first four columns.
  return CategoryTable::from_counts({3, 9, 40, 80, 300, 900},
                                    LambdaMode::kBinAligned);
}

LogitsBatch random_batch(int rows, int cols, int fg_categories,
                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> logit(-3.0, 3.0);
  std::uniform_int_distribution<int> label(-1, fg_categories - 1);
  LogitsBatch batch;
  batch.logits.resize(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) batch.logits(i, j) = logit(rng);
    batch.labels.push_back(label(rng));
  }
  return batch;
}

struct VariantCase {
  std::string name;
  LossSpec spec;
};

std::vector<VariantCase> variants() {
  return {
      {"bce", {LossKind::kBce}},
      {"eql", {LossKind::kEql}},
      {"beql_b2", {LossKind::kBeql, 2.0}},
      {"beql_b5", {LossKind::kBeql, 5.0}},
      {"beql_b10", {LossKind::kBeql, 10.0}},
      {"droploss", {LossKind::kDropLoss}},
      {"fixed_drop", {LossKind::kFixedDrop, 4.0, 0.5}},
      {"softmax", {LossKind::kSoftmax}},
  };
}

// Loss with weights frozen: only the logits vary under differencing.
double frozen_loss(const LossSpec& spec, const LogitsBatch& batch,
                   const WeightMatrix& weights, int num_categories) {
  if (spec.kind == LossKind::kSoftmax) return softmax_ce(batch, num_categories).loss;
  return weighted_bce(batch, weights).loss;
}

void check_loss_level(const VariantCase& vc, const CategoryTable& table,
                      std::mt19937_64& rng, GradCheckReport::Entry& entry,
                      bool perturb_hook) {
  const int c = table.num_categories();
  const int width = vc.spec.kind == LossKind::kSoftmax ? c + 1 : c;
  for (int instance = 0; instance < kInstances; ++instance) {
    LogitsBatch batch = random_batch(8, width, c, rng);
    WeightMatrix weights;
    Eigen::MatrixXd analytic;
    if (vc.spec.kind == LossKind::kSoftmax) {
      analytic = softmax_ce(batch, c).grad;
    } else {
      weights = make_weights(vc.spec, batch, table, rng);
      analytic = weighted_bce(batch, weights).grad;
    }
    if (perturb_hook && instance == 0) analytic(0, 0) += 1e-3;

    for (int i = 0; i < batch.logits.rows(); ++i) {
      for (int j = 0; j < width; ++j) {
        const double saved = batch.logits(i, j);
        batch.logits(i, j) = saved + kStep;
        const double up = frozen_loss(vc.spec, batch, weights, c);
        batch.logits(i, j) = saved - kStep;
        const double down = frozen_loss(vc.spec, batch, weights, c);
        batch.logits(i, j) = saved;
        const double numeric = (up - down) / (2.0 * kStep);
        const double rel = rel_error(analytic(i, j), numeric);
        if (rel > entry.worst_loss_rel) {
          entry.worst_loss_rel = rel;
          entry.worst_cell = "loss(" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
      }
    }
  }
}

void check_model_level(const VariantCase& vc, const CategoryTable& table,
                       std::mt19937_64& rng, GradCheckReport::Entry& entry) {
  const int c = table.num_categories();
  const int width = vc.spec.kind == LossKind::kSoftmax ? c + 1 : c;
  const int in_dim = 6, hidden = 5, rows = 8;
  std::uniform_real_distribution<double> coord(-1.0, 1.0);

  for (int instance = 0; instance < kInstances; ++instance) {
    ClassifierParams params = init_params(in_dim, hidden, width, rng());
    Eigen::MatrixXd features(rows, in_dim);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < in_dim; ++k) features(i, k) = coord(rng);
    LogitsBatch batch{forward(params, features), {}};
    std::uniform_int_distribution<int> label(-1, c - 1);
    for (int i = 0; i < rows; ++i) batch.labels.push_back(label(rng));

    WeightMatrix weights;
    if (vc.spec.kind != LossKind::kSoftmax)
      weights = make_weights(vc.spec, batch, table, rng);

    auto loss_at = [&](const ClassifierParams& p) {
      LogitsBatch b{forward(p, features), batch.labels};
      return frozen_loss(vc.spec, b, weights, c);
    };
    Eigen::MatrixXd upstream = vc.spec.kind == LossKind::kSoftmax
                                   ? softmax_ce(batch, c).grad
                                   : weighted_bce(batch, weights).grad;
    ParamGrads analytic = backward(params, features, upstream);

    auto check_block = [&](Eigen::MatrixXd& block, const Eigen::MatrixXd& grad,
                           const char* name) {
      for (Eigen::Index i = 0; i < block.rows(); ++i) {
        for (Eigen::Index j = 0; j < block.cols(); ++j) {
          const double saved = block(i, j);
          block(i, j) = saved + kStep;
          const double up = loss_at(params);
          block(i, j) = saved - kStep;
          const double down = loss_at(params);
          block(i, j) = saved;
          const double rel = rel_error(grad(i, j), (up - down) / (2.0 * kStep));
          if (rel > entry.worst_model_rel) {
            entry.worst_model_rel = rel;
            entry.worst_cell = std::string(name) + "(" + std::to_string(i) + "," +
                               std::to_string(j) + ")";
          }
        }
      }
    };
    check_block(params.w1, analytic.w1, "w1");
    check_block(params.w2, analytic.w2, "w2");
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd& bias = pass == 0 ? params.b1 : params.b2;
      const Eigen::VectorXd& grad = pass == 0 ? analytic.b1 : analytic.b2;
      for (Eigen::Index i = 0; i < bias.size(); ++i) {
        const double saved = bias(i);
        bias(i) = saved + kStep;
        const double up = loss_at(params);
        bias(i) = saved - kStep;
        const double down = loss_at(params);
        bias(i) = saved;
        const double rel = rel_error(grad(i), (up - down) / (2.0 * kStep));
        if (rel > entry.worst_model_rel) {
          entry.worst_model_rel = rel;
          entry.worst_cell = (pass == 0 ? "b1(" : "b2(") + std::to_string(i) + ")";
        }
      }
    }
  }
}

}  // namespace

GradCheckReport run_gradcheck(bool perturb_hook) {
  GradCheckReport report;
  CategoryTable table = check_table();
  std::mt19937_64 rng(20240117);
  for (const auto& vc : variants()) {
    GradCheckReport::Entry entry;
    entry.variant = vc.name;
    check_loss_level(vc, table, rng, entry, perturb_hook);
    check_model_level(vc, table, rng, entry);
    entry.pass = entry.worst_loss_rel <= kLossLevelTolerance &&
                 entry.worst_model_rel <= kModelLevelTolerance;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace droploss
