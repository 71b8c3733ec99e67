#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pcpg/tape.hpp"

namespace pcpg {

// One parameter tensor entering a gradient check: a name for reporting, the
// point to differentiate at, and the analytic gradient produced at that point.
struct GradCheckInput {
  std::string name;
  ad::Matrix value;
  ad::Matrix analytic;
};

struct GradCheckEntry {
  std::string name;
  int row = 0;
  int col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  std::size_t checked = 0;
  bool passed(double tol) const { return checked > 0 && max_rel_error < tol; }
};

// Central finite-difference comparison: perturbs every entry of every input
// by +-eps, evaluates `loss` at the shifted points, and compares the slope
// against the supplied analytic gradient. rel = |a-f| / max(|a|,|f|,1), so
// near-zero entries are judged on absolute error.
//
// `loss` must be a pure function of the inputs (same order as `inputs`).
GradCheckReport gradient_check(
    const std::function<double(const std::vector<ad::Matrix>&)>& loss,
    const std::vector<GradCheckInput>& inputs, double eps = 1e-5);

std::string describe(const GradCheckReport& report);

}  // namespace pcpg
