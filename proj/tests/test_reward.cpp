#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "pcpg/metrics.hpp"
#include "pcpg/reward.hpp"
#include "pcpg/rng.hpp"
#include "pcpg/vocab.hpp"

using pcpg::DiscountMode;
using pcpg::Rng;
using pcpg::TokenSequence;
using pcpg::discounted_returns;
using pcpg::edit_distance;
using pcpg::immediate_rewards;
using pcpg::reward_trace;
using pcpg::tokens_from_text;
using pcpg::total_reward;

namespace {

TokenSequence random_sequence(Rng& rng, int min_len, int max_len, int alphabet) {
  const int len = rng.uniform_int(min_len, max_len);
  std::vector<int> toks(static_cast<std::size_t>(len));
  for (int& t : toks) t = pcpg::vocab::kFirstLetter + rng.uniform_int(0, alphabet - 1);
  return TokenSequence(std::move(toks));
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("immediate rewards on a perfect two-token prediction") {
  const Eigen::VectorXd r = immediate_rewards(tokens_from_text("ab"), tokens_from_text("ab"));
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 1.0);
}

TEST_CASE("immediate reward of a correct character in a long phrase") {
  // growing "bin blue at f t" by 'w' moves the prefix one edit closer
  const TokenSequence ref = tokens_from_text("bin blue at f two now");
  const Eigen::VectorXd r = immediate_rewards(tokens_from_text("bin blue at f tw"), ref);
  CHECK(r[r.size() - 1] == 1.0);
}

TEST_CASE("a character that leaves the distance unchanged earns zero") {
  // after "ab" matches "ab" completely, ED("abq","ab") == 1 == ED("ab","ab")+1,
  // so the reward is -1; a repeat of the last matched char gives 0 against "abb"
  const Eigen::VectorXd r = immediate_rewards(tokens_from_text("aq"), tokens_from_text("ab"));
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 0.0);  // ED("aq","ab") == 1 == ED("a","ab")
}

TEST_CASE("immediate rewards reject empty inputs") {
  CHECK_THROWS_AS(immediate_rewards(tokens_from_text(""), tokens_from_text("a")),
                  std::invalid_argument);
  CHECK_THROWS_AS(immediate_rewards(tokens_from_text("a"), tokens_from_text("")),
                  std::invalid_argument);
}

TEST_CASE("telescoping: rewards sum to |ref| minus final edit distance") {
  Rng rng = pcpg::substream(31, "telescope");
  for (int it = 0; it < 1000; ++it) {
    const TokenSequence pred = random_sequence(rng, 1, 20, 5);
    const TokenSequence ref = random_sequence(rng, 1, 20, 5);
    const Eigen::VectorXd r = immediate_rewards(pred, ref);
    const double expected = static_cast<double>(ref.size()) - edit_distance(pred, ref);
    CHECK(r.sum() == expected);  // every addend is a small integer, sum is exact
  }
}

TEST_CASE("perfect prediction earns |ref| in total") {
  Rng rng = pcpg::substream(32, "perfect");
  for (int it = 0; it < 100; ++it) {
    const TokenSequence ref = random_sequence(rng, 1, 15, 4);
    const Eigen::VectorXd r = immediate_rewards(ref, ref);
    CHECK(r.sum() == static_cast<double>(ref.size()));
  }
}

TEST_CASE("each immediate reward is -1, 0 or +1") {
  Rng rng = pcpg::substream(33, "unit-steps");
  for (int it = 0; it < 500; ++it) {
    const TokenSequence pred = random_sequence(rng, 1, 20, 3);
    const TokenSequence ref = random_sequence(rng, 1, 20, 3);
    const Eigen::VectorXd r = immediate_rewards(pred, ref);
    for (Eigen::Index u = 0; u < r.size(); ++u)
      CHECK((r[u] == -1.0 || r[u] == 0.0 || r[u] == 1.0));
  }
}

TEST_CASE("discounted returns: suffix sums at gamma 1") {
  const Eigen::VectorXd ret =
      discounted_returns(vec({1.0, 1.0}), 1.0, DiscountMode::EndAnchored);
  CHECK(ret[0] == 2.0);
  CHECK(ret[1] == 1.0);
  const Eigen::VectorXd ret2 =
      discounted_returns(vec({1.0, 1.0}), 1.0, DiscountMode::Conventional);
  CHECK(ret2[0] == 2.0);
  CHECK(ret2[1] == 1.0);
}

TEST_CASE("discounted returns: gamma 0 keeps only the current reward in conventional mode") {
  const Eigen::VectorXd r = vec({0.3, -0.7, 1.0});
  const Eigen::VectorXd ret = discounted_returns(r, 0.0, DiscountMode::Conventional);
  for (Eigen::Index u = 0; u < r.size(); ++u) CHECK(ret[u] == r[u]);
}

TEST_CASE("discounted returns: fixed end-anchored exponents") {
  // R_u = sum_i gamma^(U-i) r_i weights the last step with gamma^0 for every u
  const Eigen::VectorXd ret =
      discounted_returns(vec({1.0, 1.0, 1.0}), 0.5, DiscountMode::EndAnchored);
  CHECK(ret[0] == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(ret[1] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(ret[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(total_reward(ret) == doctest::Approx(4.25).epsilon(1e-12));
}

TEST_CASE("the two discount modes agree at gamma 1") {
  Rng rng = pcpg::substream(34, "modes");
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd r(rng.uniform_int(1, 12));
    for (Eigen::Index u = 0; u < r.size(); ++u) r[u] = rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd a = discounted_returns(r, 1.0, DiscountMode::EndAnchored);
    const Eigen::VectorXd b = discounted_returns(r, 1.0, DiscountMode::Conventional);
    for (Eigen::Index u = 0; u < r.size(); ++u) CHECK(a[u] == b[u]);
  }
}

TEST_CASE("conventional returns satisfy the backward recurrence") {
  Rng rng = pcpg::substream(35, "recurrence");
  Eigen::VectorXd r(10);
  for (Eigen::Index u = 0; u < r.size(); ++u) r[u] = rng.uniform(-1.0, 1.0);
  const double gamma = 0.9;
  const Eigen::VectorXd ret = discounted_returns(r, gamma, DiscountMode::Conventional);
  for (Eigen::Index u = 0; u + 1 < r.size(); ++u)
    CHECK(ret[u] == doctest::Approx(r[u] + gamma * ret[u + 1]).epsilon(1e-14));
  CHECK(ret[r.size() - 1] == r[r.size() - 1]);
}

TEST_CASE("gamma outside [0,1] is rejected") {
  CHECK_THROWS_AS(discounted_returns(vec({1.0}), -0.1, DiscountMode::EndAnchored),
                  std::invalid_argument);
  CHECK_THROWS_AS(discounted_returns(vec({1.0}), 1.1, DiscountMode::Conventional),
                  std::invalid_argument);
}

TEST_CASE("total reward sums returns") {
  CHECK(total_reward(Eigen::VectorXd(0)) == 0.0);
  CHECK(total_reward(vec({2.0, 1.0})) == 3.0);
}

TEST_CASE("reward trace ties the pieces together") {
  Rng rng = pcpg::substream(36, "trace");
  for (int it = 0; it < 50; ++it) {
    const TokenSequence pred = random_sequence(rng, 1, 12, 4);
    const TokenSequence ref = random_sequence(rng, 1, 12, 4);
    const auto trace = reward_trace(pred, ref, 0.99, DiscountMode::EndAnchored);
    REQUIRE(trace.immediate.size() == static_cast<Eigen::Index>(pred.size()));
    REQUIRE(trace.returns.size() == trace.immediate.size());
    CHECK(trace.total == trace.returns.sum());
    CHECK(trace.gamma == 0.99);
  }
}
