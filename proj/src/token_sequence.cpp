#include "pcpg/token_sequence.hpp"

#include <stdexcept>

#include "pcpg/vocab.hpp"

namespace pcpg {

TokenSequence tokens_from_text(std::string_view text) {
  TokenSequence seq;
  seq.tokens.reserve(text.size());
  for (char c : text) seq.tokens.push_back(vocab::from_char(c));
  return seq;
}

std::string tokens_to_text(const TokenSequence& seq) {
  std::string out;
  out.reserve(seq.size());
  for (int id : seq.tokens) out += vocab::to_char(id);
  return out;
}

bool is_canonical(const TokenSequence& seq) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const int id = seq.tokens[i];
    if (!vocab::is_valid(id)) return false;
    if (id == vocab::kPad || id == vocab::kBos) return false;
    if (id == vocab::kEos && i + 1 != seq.size()) return false;
  }
  return true;
}

TokenSequence strip_controls(const TokenSequence& seq) {
  TokenSequence out;
  out.tokens.reserve(seq.size());
  for (int id : seq.tokens) {
    if (!vocab::is_valid(id))
      throw std::invalid_argument("strip_controls: invalid token id " + std::to_string(id));
    if (id == vocab::kEos) break;
    if (id == vocab::kPad || id == vocab::kBos) continue;
    out.tokens.push_back(id);
  }
  return out;
}

TokenSequence with_eos(const TokenSequence& seq) {
  TokenSequence out = seq;
  if (!out.empty() && out.tokens.back() == vocab::kEos) return out;
  out.tokens.push_back(vocab::kEos);
  return out;
}

}  // namespace pcpg
