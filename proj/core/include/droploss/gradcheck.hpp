#pragma once

#include <string>
#include <vector>

namespace droploss {

// Central finite-difference audit of every analytic gradient path: loss-level
// (dLoss/dlogits, tolerance 1e-6) and end-to-end through the classifier
// (dLoss/dparams, tolerance 1e-5), 5 random instances per loss variant with
// weights held fixed during differencing.
struct GradCheckReport {
  struct Entry {
    std::string variant;
    double worst_loss_rel = 0.0;
    double worst_model_rel = 0.0;
    bool pass = true;
    std::string worst_cell;
  };
  std::vector<Entry> entries;
  bool pass = true;
};

inline constexpr double kLossLevelTolerance = 1e-6;
inline constexpr double kModelLevelTolerance = 1e-5;

// perturb_hook deliberately corrupts one analytic gradient cell; the report
// must then fail (negative control).
GradCheckReport run_gradcheck(bool perturb_hook = false);

}  // namespace droploss
