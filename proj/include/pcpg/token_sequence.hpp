#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pcpg {

// A sequence of vocabulary indices. Canonical sequences (transcripts,
// decode results) carry no PAD/BOS and at most a trailing EOS; raw model
// samples may contain any valid index and are normalized via
// strip_controls before they are treated as text.
struct TokenSequence {
  std::vector<int> tokens;

  TokenSequence() = default;
  explicit TokenSequence(std::vector<int> t) : tokens(std::move(t)) {}

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  int operator[](std::size_t i) const { return tokens[i]; }
  bool operator==(const TokenSequence&) const = default;

  auto begin() const { return tokens.begin(); }
  auto end() const { return tokens.end(); }
};

// Text to char tokens (no BOS/EOS added). Throws on unsupported characters.
TokenSequence tokens_from_text(std::string_view text);
// Printable rendering; control tokens are rejected.
std::string tokens_to_text(const TokenSequence& seq);

// All indices valid, no PAD/BOS anywhere, at most one EOS and only at the end.
bool is_canonical(const TokenSequence& seq);

// Drop PAD/BOS, truncate at the first EOS (exclusive).
TokenSequence strip_controls(const TokenSequence& seq);

// Copy with EOS appended; used to form teacher-forcing targets.
TokenSequence with_eos(const TokenSequence& seq);

}  // namespace pcpg
