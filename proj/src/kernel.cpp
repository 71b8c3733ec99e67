#include "pcpg/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pcpg {

namespace {

double left_to_right_sum(const Eigen::VectorXd& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) s += w[i];
  return s;
}

}  // namespace

PcpgKernel::PcpgKernel(int k, int s, Eigen::VectorXd weights)
    : k_(k), s_(s), w_(std::move(weights)) {
  if (k_ < 1) throw std::invalid_argument("PcpgKernel: k must be >= 1");
  if (s_ < 1) throw std::invalid_argument("PcpgKernel: s must be >= 1");
  if (w_.size() != k_)
    throw std::invalid_argument("PcpgKernel: weight vector length " +
                                std::to_string(w_.size()) + " does not match k=" +
                                std::to_string(k_));
  double total = 0.0;
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (!std::isfinite(w_[i]) || w_[i] < 0.0)
      throw std::invalid_argument("PcpgKernel: weights must be finite and nonnegative");
    total += w_[i];
  }
  if (total <= 0.0) throw std::invalid_argument("PcpgKernel: weight sum must be positive");
  w_ /= total;

  // Make the running sum land on 1.0 exactly: the last weight absorbs the
  // rounding residual, stepped by ulps if the first correction still misses.
  double partial = 0.0;
  for (Eigen::Index i = 0; i + 1 < w_.size(); ++i) partial += w_[i];
  w_[k_ - 1] = 1.0 - partial;
  while (left_to_right_sum(w_) != 1.0) {
    w_[k_ - 1] = std::nextafter(
        w_[k_ - 1], left_to_right_sum(w_) > 1.0 ? -1.0 : 2.0);
    if (w_[k_ - 1] < 0.0)
      throw std::invalid_argument("PcpgKernel: weights cannot be normalized");
  }
}

PcpgKernel PcpgKernel::uniform(int k, int s) {
  if (k < 1) throw std::invalid_argument("PcpgKernel::uniform: k must be >= 1");
  return PcpgKernel(k, s, Eigen::VectorXd::Constant(k, 1.0 / k));
}

Eigen::VectorXd per_step_losses(const Eigen::VectorXd& returns,
                                const Eigen::VectorXd& log_probs) {
  if (returns.size() != log_probs.size())
    throw std::invalid_argument("per_step_losses: length mismatch (" +
                                std::to_string(returns.size()) + " vs " +
                                std::to_string(log_probs.size()) + ")");
  if (returns.size() < 1) throw std::invalid_argument("per_step_losses: empty input");
  return -(returns.array() * log_probs.array());
}

Eigen::VectorXd window_map(const Eigen::VectorXd& losses, const PcpgKernel& kernel,
                           BoundaryPolicy padding) {
  const int u_len = static_cast<int>(losses.size());
  if (u_len < 1) throw std::invalid_argument("window_map: empty loss vector");
  const int k = kernel.size();
  const int s = kernel.stride();
  const int half = k / 2;
  const Eigen::VectorXd& w = kernel.weights();

  const int n_windows = (u_len - 1) / s + 1;
  Eigen::VectorXd mapped(n_windows);
  int out = 0;
  for (int center = 1; center <= u_len; center += s) {
    double value = 0.0;
    double in_range_weight = 0.0;
    for (int j = 1; j <= k; ++j) {
      const int pos = center - half + j - 1;  // 1-based tap position
      if (pos < 1 || pos > u_len) continue;
      value += w[j - 1] * losses[pos - 1];
      in_range_weight += w[j - 1];
    }
    if (padding == BoundaryPolicy::Truncate)
      value = in_range_weight > 0.0 ? value / in_range_weight : 0.0;
    mapped[out++] = value;
  }
  return mapped;
}

double aggregate(const Eigen::VectorXd& mapped) { return mapped.sum(); }

Eigen::VectorXd coefficient_map(const PcpgKernel& kernel, int u_len,
                                BoundaryPolicy padding) {
  if (u_len < 1) throw std::invalid_argument("coefficient_map: U must be >= 1");
  const int k = kernel.size();
  const int s = kernel.stride();
  const int half = k / 2;
  const Eigen::VectorXd& w = kernel.weights();

  // Truncate renormalizes each window by its in-range weight mass.
  Eigen::VectorXd center_norm;
  if (padding == BoundaryPolicy::Truncate) {
    center_norm = Eigen::VectorXd::Zero(u_len + 1);
    for (int center = 1; center <= u_len; center += s) {
      double mass = 0.0;
      for (int j = 1; j <= k; ++j) {
        const int pos = center - half + j - 1;
        if (pos >= 1 && pos <= u_len) mass += w[j - 1];
      }
      center_norm[center] = mass;
    }
  }

  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(u_len);
  for (int pos = 1; pos <= u_len; ++pos) {
    double c = 0.0;
    for (int j = 1; j <= k; ++j) {
      const int center = pos + half + 1 - j;
      if (center < 1 || center > u_len) continue;
      if ((center - 1) % s != 0) continue;  // not an emitted window
      if (padding == BoundaryPolicy::Truncate) {
        const double mass = center_norm[center];
        if (mass > 0.0) c += w[j - 1] / mass;
      } else {
        c += w[j - 1];
      }
    }
    coeff[pos - 1] = c;
  }
  return coeff;
}

double combine(double ce_loss, double pcpg_loss, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("combine: lambda must lie in [0, 1]");
  return (1.0 - lambda) * ce_loss + lambda * pcpg_loss;
}

ad::Var windowed_loss(ad::Tape& tape, std::span<const ad::Var> step_losses,
                      const PcpgKernel& kernel, BoundaryPolicy padding) {
  const int u_len = static_cast<int>(step_losses.size());
  if (u_len < 1) throw std::invalid_argument("windowed_loss: empty loss vector");
  const int k = kernel.size();
  const int half = k / 2;
  const Eigen::VectorXd& w = kernel.weights();

  std::vector<ad::Var> windows;
  for (int center = 1; center <= u_len; center += kernel.stride()) {
    std::vector<ad::Var> taps;
    double in_range_weight = 0.0;
    for (int j = 1; j <= k; ++j) {
      const int pos = center - half + j - 1;
      if (pos < 1 || pos > u_len) continue;
      taps.push_back(tape.scale(step_losses[static_cast<std::size_t>(pos - 1)], w[j - 1]));
      in_range_weight += w[j - 1];
    }
    if (taps.empty()) continue;
    ad::Var window = tape.add_n(taps);
    if (padding == BoundaryPolicy::Truncate && in_range_weight > 0.0)
      window = tape.scale(window, 1.0 / in_range_weight);
    windows.push_back(window);
  }
  if (windows.empty()) return tape.scalar(0.0);
  return tape.add_n(windows);
}

}  // namespace pcpg
