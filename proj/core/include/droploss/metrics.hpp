#pragma once

#include <string>
#include <vector>

#include "droploss/model.hpp"
#include "droploss/synth.hpp"

namespace droploss {

// Per-category and per-bin evaluation standing in for binned AP. Recall is
// threshold-free (argmax over foreground scores on true-foreground rows),
// isolating category confusion from the fg/bg decision; the confusion rates
// use the thresholded decision.
struct EvalReport {
  std::vector<double> recall;        // -1 when the category is absent
  std::vector<double> precision;     // -1 when nothing was predicted as j
  std::vector<long> support;         // foreground instances per category
  double bin_mean_recall[3] = {0, 0, 0};  // indexed by Bin; -1 if bin empty
  double macro_mean_recall = 0.0;
  double bg_as_fg_rate = 0.0;
  double fg_as_bg_rate = 0.0;
  std::vector<int> absent_categories;

  // Pareto sweep metrics.
  double tail_metric() const {  // mean of rare+common bin recalls
    return 0.5 * (bin_mean_recall[0] + bin_mean_recall[1]);
  }
  double head_metric() const { return bin_mean_recall[2]; }
};

// Thresholded decision for one row of sigmoid scores: argmax category if the
// max score reaches the threshold, else background. Ties break to the lowest
// index. For a softmax model (scores width C+1) the decision is the argmax
// over all classes, background winning on the last column.
int predict_row(const Eigen::RowVectorXd& scores, double threshold,
                int num_categories);

EvalReport evaluate(const ClassifierParams& params, const ProposalPool& eval_pool,
                    const CategoryTable& table, double threshold);

void write_eval_csv(const EvalReport& report, const CategoryTable& table,
                    const std::string& path);

}  // namespace droploss
