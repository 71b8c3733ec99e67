#include "pcpg/metrics.hpp"

#include <algorithm>
#include <span>
#include <stdexcept>

#include "pcpg/vocab.hpp"

namespace pcpg {

namespace {

int levenshtein(std::span<const int> a, std::span<const int> b) {
  if (a.size() < b.size()) std::swap(a, b);  // roll over the shorter side
  const int n = static_cast<int>(b.size());
  std::vector<int> row(n + 1), prev(n + 1);
  for (int j = 0; j <= n; ++j) prev[j] = j;
  for (int i = 1; i <= static_cast<int>(a.size()); ++i) {
    row[0] = i;
    for (int j = 1; j <= n; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({prev[j] + 1, row[j - 1] + 1, sub});
    }
    std::swap(row, prev);
  }
  return prev[n];
}

std::vector<std::vector<int>> split_words(const TokenSequence& seq, int separator) {
  const TokenSequence chars = strip_controls(seq);
  std::vector<std::vector<int>> words;
  std::vector<int> cur;
  for (int id : chars.tokens) {
    if (id == separator) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(id);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

int edit_distance(const TokenSequence& a, const TokenSequence& b) {
  return levenshtein(a.tokens, b.tokens);
}

Eigen::MatrixXi edit_distance_table(const TokenSequence& a, const TokenSequence& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  Eigen::MatrixXi d(m + 1, n + 1);
  for (int i = 0; i <= m; ++i) d(i, 0) = i;
  for (int j = 0; j <= n; ++j) d(0, j) = j;
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= n; ++j)
      d(i, j) = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1,
                          d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d;
}

double cer(const TokenSequence& hyp, const TokenSequence& ref) {
  const TokenSequence h = strip_controls(hyp);
  const TokenSequence r = strip_controls(ref);
  if (r.empty())
    throw std::invalid_argument("cer: reference is empty after stripping control tokens");
  return static_cast<double>(edit_distance(h, r)) / static_cast<double>(r.size());
}

double wer(const TokenSequence& hyp, const TokenSequence& ref, int separator) {
  const auto hyp_words = split_words(hyp, separator);
  const auto ref_words = split_words(ref, separator);
  if (ref_words.empty()) throw std::invalid_argument("wer: reference has no words");

  // word-level Levenshtein, words compared as atoms
  const int n = static_cast<int>(ref_words.size());
  std::vector<int> prev(n + 1), row(n + 1);
  for (int j = 0; j <= n; ++j) prev[j] = j;
  for (int i = 1; i <= static_cast<int>(hyp_words.size()); ++i) {
    row[0] = i;
    for (int j = 1; j <= n; ++j) {
      const int sub = prev[j - 1] + (hyp_words[i - 1] == ref_words[j - 1] ? 0 : 1);
      row[j] = std::min({prev[j] + 1, row[j - 1] + 1, sub});
    }
    std::swap(row, prev);
  }
  return static_cast<double>(prev[n]) / static_cast<double>(n);
}

IncrementalEditDistance::IncrementalEditDistance(const TokenSequence& reference)
    : ref_(reference.tokens) {
  row_.resize(ref_.size() + 1);
  prev_.resize(ref_.size() + 1);
  for (std::size_t j = 0; j < row_.size(); ++j) row_[j] = static_cast<int>(j);
}

void IncrementalEditDistance::push(int token) {
  std::swap(prev_, row_);
  ++pushed_;
  row_[0] = pushed_;
  for (std::size_t j = 1; j < row_.size(); ++j) {
    const int sub = prev_[j - 1] + (token == ref_[j - 1] ? 0 : 1);
    row_[j] = std::min({prev_[j] + 1, row_[j - 1] + 1, sub});
  }
}

}  // namespace pcpg
