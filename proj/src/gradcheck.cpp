#include "pcpg/gradcheck.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pcpg {

GradCheckReport gradient_check(
    const std::function<double(const std::vector<ad::Matrix>&)>& loss,
    const std::vector<GradCheckInput>& inputs, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("gradient_check: eps must be positive");

  std::vector<ad::Matrix> point;
  point.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.analytic.rows() != in.value.rows() || in.analytic.cols() != in.value.cols())
      throw std::invalid_argument("gradient_check: analytic gradient for '" + in.name +
                                  "' does not match the value shape");
    point.push_back(in.value);
  }

  GradCheckReport report;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const GradCheckInput& in = inputs[t];
    for (Eigen::Index r = 0; r < in.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < in.value.cols(); ++c) {
        const double saved = point[t](r, c);
        point[t](r, c) = saved + eps;
        const double up = loss(point);
        point[t](r, c) = saved - eps;
        const double down = loss(point);
        point[t](r, c) = saved;

        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = in.analytic(r, c);
        const double denom =
            std::max({std::abs(analytic), std::abs(numeric), 1.0});
        const double rel = std::abs(analytic - numeric) / denom;
        ++report.checked;
        if (rel > report.max_rel_error || report.checked == 1) {
          report.max_rel_error = rel;
          report.worst = {in.name, static_cast<int>(r), static_cast<int>(c),
                          analytic, numeric, rel};
        }
      }
    }
  }
  return report;
}

std::string describe(const GradCheckReport& report) {
  std::ostringstream os;
  os << "checked " << report.checked << " entries, max rel error "
     << report.max_rel_error;
  if (report.checked > 0) {
    os << " at " << report.worst.name << "(" << report.worst.row << ","
       << report.worst.col << "): analytic " << report.worst.analytic
       << " vs numeric " << report.worst.numeric;
  }
  return os.str();
}

}  // namespace pcpg
