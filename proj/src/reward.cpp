#include "pcpg/reward.hpp"

#include <cmath>
#include <stdexcept>

#include "pcpg/metrics.hpp"

namespace pcpg {

Eigen::VectorXd immediate_rewards(const TokenSequence& prediction,
                                  const TokenSequence& reference) {
  if (prediction.empty()) throw std::invalid_argument("immediate_rewards: empty prediction");
  if (reference.empty()) throw std::invalid_argument("immediate_rewards: empty reference");

  IncrementalEditDistance dp(reference);
  Eigen::VectorXd r(static_cast<Eigen::Index>(prediction.size()));
  int prev = dp.distance();  // ED of the empty prefix == |S|
  for (std::size_t u = 0; u < prediction.size(); ++u) {
    dp.push(prediction[u]);
    const int cur = dp.distance();
    r[static_cast<Eigen::Index>(u)] = -static_cast<double>(cur - prev);
    prev = cur;
  }
  return r;
}

Eigen::VectorXd discounted_returns(const Eigen::VectorXd& immediate, double gamma,
                                   DiscountMode mode) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("discounted_returns: gamma must lie in [0, 1]");
  const Eigen::Index u_len = immediate.size();
  Eigen::VectorXd returns(u_len);
  double acc = 0.0;
  for (Eigen::Index u = u_len - 1; u >= 0; --u) {
    if (mode == DiscountMode::Conventional) {
      // R_u = r_u + gamma * R_{u+1}
      acc = immediate[u] + gamma * acc;
    } else {
      // R_u = gamma^(U-1-u) * r_u + R_{u+1}   (0-based u)
      acc = std::pow(gamma, static_cast<double>(u_len - 1 - u)) * immediate[u] + acc;
    }
    returns[u] = acc;
  }
  return returns;
}

double total_reward(const Eigen::VectorXd& returns) { return returns.sum(); }

RewardTrace reward_trace(const TokenSequence& prediction, const TokenSequence& reference,
                         double gamma, DiscountMode mode) {
  RewardTrace trace;
  trace.gamma = gamma;
  trace.immediate = immediate_rewards(prediction, reference);
  trace.returns = discounted_returns(trace.immediate, gamma, mode);
  trace.total = total_reward(trace.returns);
  return trace;
}

}  // namespace pcpg
