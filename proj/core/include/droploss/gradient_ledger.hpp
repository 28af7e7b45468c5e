#pragma once

#include <Eigen/Dense>
#include <vector>

#include "droploss/losses.hpp"

namespace droploss {

// Per-category accumulators of gradient magnitude split by origin. Every
// (row, category) cell of an accounted batch lands in exactly one bucket:
//   encouraging            y_j = 1
//   bg_discouraging        background row (E(r) = 0)
//   fg_mis_discouraging    foreground row of another category
struct GradientLedger {
  std::vector<double> encouraging;
  std::vector<double> bg_discouraging;
  std::vector<double> fg_mis_discouraging;

  explicit GradientLedger(int num_categories = 0)
      : encouraging(num_categories, 0.0),
        bg_discouraging(num_categories, 0.0),
        fg_mis_discouraging(num_categories, 0.0) {}

  int num_categories() const { return static_cast<int>(encouraging.size()); }
  double total() const;
};

// Adds |grad| per cell into the origin buckets. grad must come from a loss on
// the same batch.
void account_gradients(const LogitsBatch& batch, const Eigen::MatrixXd& grad,
                       GradientLedger& ledger);

// bg_discouraging / (bg_discouraging + fg_mis_discouraging) for category j;
// negative when the denominator is zero (value absent from reports).
double bg_origin_fraction(const GradientLedger& ledger, int category);

}  // namespace droploss
