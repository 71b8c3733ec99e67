#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pcpg/token_sequence.hpp"

namespace pcpg {

// Unit-cost Levenshtein distance. Two rolling DP rows, O(min(|a|,|b|)) memory.
int edit_distance(const TokenSequence& a, const TokenSequence& b);

// Full DP table (|a|+1) x (|b|+1); debug alignment mode only.
Eigen::MatrixXi edit_distance_table(const TokenSequence& a, const TokenSequence& b);

// Character error rate: edit_distance(hyp', ref') / |ref'| where ' strips
// PAD/BOS and truncates at EOS. Throws if the stripped reference is empty.
double cer(const TokenSequence& hyp, const TokenSequence& ref);

// Word error rate over words obtained by splitting on `separator` after
// stripping control tokens. Throws if the reference has no words.
double wer(const TokenSequence& hyp, const TokenSequence& ref, int separator);

// Extends one DP row per pushed prediction token against a fixed reference,
// so a growing prefix's distances cost O(|ref|) per step instead of a full
// recomputation. distance() after u pushes equals
// edit_distance(prefix_of_length_u, ref).
class IncrementalEditDistance {
 public:
  explicit IncrementalEditDistance(const TokenSequence& reference);

  void push(int token);
  int distance() const { return row_.back(); }
  int length() const { return pushed_; }

 private:
  std::vector<int> ref_;
  std::vector<int> row_;
  std::vector<int> prev_;
  int pushed_ = 0;
};

}  // namespace pcpg
