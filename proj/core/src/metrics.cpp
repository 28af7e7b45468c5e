#include "droploss/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "droploss/csv.hpp"

namespace droploss {

int predict_row(const Eigen::RowVectorXd& scores, double threshold,
                int num_categories) {
  if (scores.size() == num_categories + 1) {
    // Softmax variant: explicit background class competes directly.
    int best = 0;
    for (int j = 1; j < scores.size(); ++j)
      if (scores(j) > scores(best)) best = j;
    return best == num_categories ? kBackground : best;
  }
  if (scores.size() != num_categories)
    throw std::invalid_argument("predict_row: score width mismatch");
  int best = 0;
  for (int j = 1; j < num_categories; ++j)
    if (scores(j) > scores(best)) best = j;
  return scores(best) >= threshold ? best : kBackground;
}

EvalReport evaluate(const ClassifierParams& params, const ProposalPool& eval_pool,
                    const CategoryTable& table, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw std::invalid_argument("evaluate: threshold outside (0,1)");
  const int c = table.num_categories();
  const bool softmax = params.out_dim() == c + 1;
  if (!softmax && params.out_dim() != c)
    throw std::invalid_argument("evaluate: model output width mismatch");

  Eigen::MatrixXd logits = forward(params, eval_pool.features);
  Eigen::MatrixXd scores(logits.rows(), logits.cols());
  if (softmax) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      Eigen::RowVectorXd shifted =
          (logits.row(i).array() - logits.row(i).maxCoeff()).exp();
      scores.row(i) = shifted / shifted.sum();
    }
  } else {
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
      for (Eigen::Index j = 0; j < logits.cols(); ++j)
        scores(i, j) = sigmoid(logits(i, j));
  }

  EvalReport report;
  report.recall.assign(c, -1.0);
  report.precision.assign(c, -1.0);
  report.support.assign(c, 0);
  std::vector<long> argmax_correct(c, 0);
  std::vector<long> predicted(c, 0), predicted_correct(c, 0);
  long bg_rows = 0, bg_as_fg = 0, fg_rows = 0, fg_as_bg = 0;

  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int truth = eval_pool.labels[i];
    const int decision = predict_row(scores.row(i), threshold, c);
    if (decision != kBackground) {
      ++predicted[decision];
      if (decision == truth) ++predicted_correct[decision];
    }
    if (truth == kBackground) {
      ++bg_rows;
      if (decision != kBackground) ++bg_as_fg;
      continue;
    }
    ++fg_rows;
    ++report.support[truth];
    if (decision == kBackground) ++fg_as_bg;
    // Threshold-free category decision over foreground scores only.
    int best = 0;
    for (int j = 1; j < c; ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    if (best == truth) ++argmax_correct[truth];
  }

  double recall_sum = 0.0;
  int recall_count = 0;
  double bin_sum[3] = {0, 0, 0};
  int bin_count[3] = {0, 0, 0};
  for (int j = 0; j < c; ++j) {
    if (report.support[j] == 0) {
      report.absent_categories.push_back(j);
      continue;
    }
    report.recall[j] = static_cast<double>(argmax_correct[j]) / report.support[j];
    recall_sum += report.recall[j];
    ++recall_count;
    const int b = static_cast<int>(table.bin(j));
    bin_sum[b] += report.recall[j];
    ++bin_count[b];
    if (predicted[j] > 0)
      report.precision[j] = static_cast<double>(predicted_correct[j]) / predicted[j];
  }
  report.macro_mean_recall = recall_count > 0 ? recall_sum / recall_count : 0.0;
  for (int b = 0; b < 3; ++b)
    report.bin_mean_recall[b] = bin_count[b] > 0 ? bin_sum[b] / bin_count[b] : -1.0;
  report.bg_as_fg_rate = bg_rows > 0 ? static_cast<double>(bg_as_fg) / bg_rows : 0.0;
  report.fg_as_bg_rate = fg_rows > 0 ? static_cast<double>(fg_as_bg) / fg_rows : 0.0;
  return report;
}

void write_eval_csv(const EvalReport& report, const CategoryTable& table,
                    const std::string& path) {
  csv::Writer out(path);
  out.row({"name", "bin", "support", "recall", "precision"});
  for (int j = 0; j < table.num_categories(); ++j) {
    out.row({std::to_string(j), bin_name(table.bin(j)),
             std::to_string(report.support[j]),
             report.recall[j] < 0 ? "" : csv::format(report.recall[j]),
             report.precision[j] < 0 ? "" : csv::format(report.precision[j])});
  }
  auto summary = [&out](const std::string& name, double v) {
    out.row({name, "", "", v < 0 ? "" : csv::format(v), ""});
  };
  summary("rare_mean_recall", report.bin_mean_recall[0]);
  summary("common_mean_recall", report.bin_mean_recall[1]);
  summary("frequent_mean_recall", report.bin_mean_recall[2]);
  summary("macro_mean_recall", report.macro_mean_recall);
  summary("bg_as_fg_rate", report.bg_as_fg_rate);
  summary("fg_as_bg_rate", report.fg_as_bg_rate);
}

}  // namespace droploss
