#pragma once

#include <Eigen/Dense>
#include <span>

#include "pcpg/tape.hpp"

namespace pcpg {

// Treatment of window taps that fall outside [1, U]:
//   ZeroPad  - out-of-range taps contribute 0 (the default),
//   Truncate - weights are renormalized over the in-range taps.
enum class BoundaryPolicy { ZeroPad, Truncate };

// Pseudo-convolution hyperparameters: window size k, stride s, and a weight
// vector of length k. Weights are renormalized at construction so their
// left-to-right sum is exactly 1.0 (the last weight absorbs the rounding
// residual), which keeps interior coefficients of a stride-1 map exact.
class PcpgKernel {
 public:
  PcpgKernel(int k, int s, Eigen::VectorXd weights);
  static PcpgKernel uniform(int k, int s);

  int size() const { return k_; }
  int stride() const { return s_; }
  const Eigen::VectorXd& weights() const { return w_; }

  bool operator==(const PcpgKernel& o) const {
    return k_ == o.k_ && s_ == o.s_ && w_ == o.w_;
  }

 private:
  int k_;
  int s_;
  Eigen::VectorXd w_;
};

// L_u = -R_u * log_probs[u]; the returns act as constants.
Eigen::VectorXd per_step_losses(const Eigen::VectorXd& returns,
                                const Eigen::VectorXd& log_probs);

// Windowed loss values at centers 1, 1+s, 1+2s, ... <= U (1-based); window j
// taps position center - floor(k/2) + j - 1. The final partial window is
// emitted.
Eigen::VectorXd window_map(const Eigen::VectorXd& losses, const PcpgKernel& kernel,
                           BoundaryPolicy padding = BoundaryPolicy::ZeroPad);

// Sum of all window outputs.
double aggregate(const Eigen::VectorXd& mapped);

// Closed-form linearization: coefficients c with
// aggregate(window_map(L)) == c.dot(L) for every L of length u_len.
// Computed position-major (per position, over covering windows) so it is an
// independent route from window_map.
Eigen::VectorXd coefficient_map(const PcpgKernel& kernel, int u_len,
                                BoundaryPolicy padding = BoundaryPolicy::ZeroPad);

// (1 - lambda) * ce + lambda * pcpg, lambda in [0, 1].
double combine(double ce_loss, double pcpg_loss, double lambda);

// Differentiable route: windows the 1x1 per-step loss nodes and sums, so the
// window structure itself lives on the tape. Numerically equal to
// aggregate(window_map(...)) and, via the linearization, to
// coefficient_map(...).dot(losses).
ad::Var windowed_loss(ad::Tape& tape, std::span<const ad::Var> step_losses,
                      const PcpgKernel& kernel,
                      BoundaryPolicy padding = BoundaryPolicy::ZeroPad);

}  // namespace pcpg
