#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "pcpg/rng.hpp"

using pcpg::Rng;

TEST_CASE("identical seeds replay identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (a.next_u64() == b.next_u64());
  CHECK(same == 0);
}

TEST_CASE("uniform stays in the half-open unit interval") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    sum += x;
  }
  CHECK(sum / 10000.0 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("ranged uniform respects its bounds") {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-2.0, 3.0);
    CHECK(x >= -2.0);
    CHECK(x < 3.0);
  }
}

TEST_CASE("normal mean and variance are near standard") {
  Rng rng(9);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(var == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("uniform_int covers its full range inclusively") {
  Rng rng(10);
  std::set<int> seen;
  for (int i = 0; i < 2000; ++i) {
    const int x = rng.uniform_int(3, 7);
    CHECK(x >= 3);
    CHECK(x <= 7);
    seen.insert(x);
  }
  CHECK(seen.size() == 5);
  CHECK(rng.uniform_int(5, 5) == 5);
  CHECK_THROWS_AS(rng.uniform_int(2, 1), std::invalid_argument);
}

TEST_CASE("categorical draws follow the weights") {
  Rng rng(11);
  const std::array<double, 3> point_mass = {0.0, 2.5, 0.0};
  for (int i = 0; i < 100; ++i) CHECK(rng.categorical(point_mass) == 1);

  const std::array<double, 4> weights = {1.0, 0.0, 1.0, 2.0};
  std::array<int, 4> counts = {0, 0, 0, 0};
  for (int i = 0; i < 8000; ++i) counts[static_cast<std::size_t>(rng.categorical(weights))]++;
  CHECK(counts[1] == 0);
  CHECK(counts[3] > counts[0]);
  CHECK(counts[0] + counts[2] + counts[3] == 8000);
  CHECK(static_cast<double>(counts[3]) / 8000.0 == doctest::Approx(0.5).epsilon(0.1));

  CHECK_THROWS_AS(rng.categorical(std::array<double, 0>{}), std::invalid_argument);
  CHECK_THROWS_AS(rng.categorical(std::array<double, 2>{0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(rng.categorical(std::array<double, 2>{1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("substreams are deterministic and label-sensitive") {
  Rng a = pcpg::substream(99, "episodes", 5, 2);
  Rng b = pcpg::substream(99, "episodes", 5, 2);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  CHECK(pcpg::substream_seed(99, "episodes", 5, 2) != pcpg::substream_seed(99, "episodes", 2, 5));
  CHECK(pcpg::substream_seed(99, "episodes") != pcpg::substream_seed(99, "init"));
  CHECK(pcpg::substream_seed(99, "init") != pcpg::substream_seed(100, "init"));
}

TEST_CASE("substream seeds rarely collide across labels") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t root = 0; root < 20; ++root)
    for (std::uint64_t a = 0; a < 20; ++a)
      for (std::uint64_t b = 0; b < 5; ++b) {
        seeds.insert(pcpg::substream_seed(root, "data", a, b));
        seeds.insert(pcpg::substream_seed(root, "init", a, b));
      }
  CHECK(seeds.size() == 20 * 20 * 5 * 2);
}
