#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace pcpg {

// SplitMix64 finalizer; used to derive substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic generator with pinned output distributions (the standard
// library's distributions are implementation-defined, so we roll our own
// on top of xoshiro256**).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // [0, 1) with 53 random bits
  double uniform();
  double uniform(double lo, double hi);
  // standard normal via Box-Muller, one spare cached
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // unbiased integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi);
  // draw an index from unnormalized nonnegative weights
  int categorical(std::span<const double> weights);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Named substream derivation: all project randomness flows from one root
// seed through (name, a, b) labels.
Rng substream(std::uint64_t root_seed, std::string_view name,
              std::uint64_t a = 0, std::uint64_t b = 0);
std::uint64_t substream_seed(std::uint64_t root_seed, std::string_view name,
                             std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace pcpg
