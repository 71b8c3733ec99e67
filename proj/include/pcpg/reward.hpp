#pragma once

#include <Eigen/Dense>

#include "pcpg/token_sequence.hpp"

namespace pcpg {

// Exponent convention for the discounted return at step u over immediate
// rewards r_u..r_U. EndAnchored uses gamma^(U-i) (latest steps weighted most,
// uniformly across u); Conventional uses gamma^(i-u). The two coincide at
// gamma == 1 (plain suffix sums).
enum class DiscountMode { EndAnchored, Conventional };

struct RewardTrace {
  Eigen::VectorXd immediate;  // r_u
  Eigen::VectorXd returns;    // R_u
  double total = 0.0;         // sum of returns
  double gamma = 1.0;
};

// Per-step rewards r_u = -(ED(y_1:u, S) - ED(y_1:u-1, S)) with
// ED(y_1:0, S) = |S|; one incremental DP pass over the prediction.
// With unit costs each r_u lands in {-1, 0, +1} and the total telescopes to
// |S| - ED(y, S).
Eigen::VectorXd immediate_rewards(const TokenSequence& prediction,
                                  const TokenSequence& reference);

Eigen::VectorXd discounted_returns(const Eigen::VectorXd& immediate, double gamma,
                                   DiscountMode mode);

double total_reward(const Eigen::VectorXd& returns);

RewardTrace reward_trace(const TokenSequence& prediction, const TokenSequence& reference,
                         double gamma, DiscountMode mode);

}  // namespace pcpg
