#include "pcpg/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pcpg {

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

Rng::Rng(std::uint64_t seed) {
  // expand the seed so an all-zero state is impossible
  s_[0] = mix64(seed);
  s_[1] = mix64(s_[0]);
  s_[2] = mix64(s_[1]);
  s_[3] = mix64(s_[2]);
}

std::uint64_t Rng::next_u64() {
  // xoshiro256**
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

int Rng::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("Rng::uniform_int: lo > hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
  // rejection sampling to avoid modulo bias
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return lo + static_cast<int>(x % span);
}

int Rng::categorical(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("Rng::categorical: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("Rng::categorical: negative or NaN weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("Rng::categorical: zero total weight");
  const double target = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size() - 1);
}

std::uint64_t substream_seed(std::uint64_t root_seed, std::string_view name,
                             std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(root_seed ^ fnv1a(name));
  h = mix64(h ^ (a + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (b + 0x9e6c63d0876a9a47ULL));
  return h;
}

Rng substream(std::uint64_t root_seed, std::string_view name,
              std::uint64_t a, std::uint64_t b) {
  return Rng(substream_seed(root_seed, name, a, b));
}

}  // namespace pcpg
