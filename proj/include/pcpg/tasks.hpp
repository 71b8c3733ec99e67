#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcpg/tape.hpp"
#include "pcpg/token_sequence.hpp"

namespace pcpg {

// Frame synthesis: each transcript token becomes a one-hot prototype row,
// repeated 1..3 times (variable speaking rate) with fresh additive Gaussian
// noise per repetition. feature_dim must cover the vocabulary.
struct FrameOptions {
  int feature_dim = 48;
  double noise = 0.3;
  int min_repeat = 1;
  int max_repeat = 3;
};

struct SyntheticSample {
  ad::Matrix frames;         // T x F, T >= |transcript|
  TokenSequence transcript;  // canonical, no EOS
  std::uint64_t seed = 0;    // per-sample substream label
  int label = -1;            // class index on word datasets, -1 elsewhere
};

bool operator==(const SyntheticSample& a, const SyntheticSample& b);

struct Dataset {
  std::string task;  // "copy", "reverse", "sentences", "words"
  int feature_dim = 48;
  std::vector<SyntheticSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

bool operator==(const Dataset& a, const Dataset& b);

// Random letter strings transcribed verbatim.
Dataset gen_copy(int n, int min_len, int max_len, std::uint64_t seed,
                 const FrameOptions& opt = {});
// Same frames as gen_copy at equal seed; the transcript runs backwards, so
// solving it requires genuine attention rather than frame-by-frame readout.
Dataset gen_reverse(int n, int min_len, int max_len, std::uint64_t seed,
                    const FrameOptions& opt = {});
// Multi-word transcripts (space-separated) for word-level error rates.
Dataset gen_sentences(int n, int min_words, int max_words, std::uint64_t seed,
                      const FrameOptions& opt = {});
// Exactly samples_per_class samples of each of n_classes distinct words,
// labeled by class, for classifier probes. n_classes <= 40.
Dataset gen_words(int n_classes, int samples_per_class, std::uint64_t seed,
                  const FrameOptions& opt = {});

// Line-oriented text format: a header carrying task, feature width, and the
// vocabulary hash (mismatching tables are rejected at load), then per sample
// a descriptor line, the transcript as raw text, and T rows of hexfloat
// features. Round-trips are bit-exact.
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

// Deterministic disjoint partition by shuffled index; every sample lands in
// exactly one part.
struct Splits {
  Dataset train, val, test;
};
Splits split_dataset(const Dataset& dataset, double val_fraction, double test_fraction,
                     std::uint64_t seed);

}  // namespace pcpg
