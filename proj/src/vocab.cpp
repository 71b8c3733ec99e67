#include "pcpg/vocab.hpp"

#include <stdexcept>

#include "pcpg/rng.hpp"

namespace pcpg::vocab {

bool is_control(int id) { return id == kPad || id == kBos || id == kEos; }

bool is_valid(int id) { return id >= 0 && id < kSize; }

int from_char(char c) {
  if (c == ' ') return kSpace;
  if (c >= 'a' && c <= 'z') return kFirstLetter + (c - 'a');
  if (c >= '0' && c <= '9') return kFirstDigit + (c - '0');
  throw std::invalid_argument(std::string("vocab::from_char: unsupported character '") + c + "'");
}

char to_char(int id) {
  if (id == kSpace) return ' ';
  if (id >= kFirstLetter && id < kFirstDigit) return static_cast<char>('a' + (id - kFirstLetter));
  if (id >= kFirstDigit && id < kSize) return static_cast<char>('0' + (id - kFirstDigit));
  throw std::invalid_argument("vocab::to_char: id " + std::to_string(id) + " is not printable");
}

std::string symbol_name(int id) {
  switch (id) {
    case kPad: return "<pad>";
    case kBos: return "<bos>";
    case kEos: return "<eos>";
    default: break;
  }
  if (!is_valid(id)) throw std::invalid_argument("vocab::symbol_name: bad id " + std::to_string(id));
  return std::string(1, to_char(id));
}

std::uint64_t table_hash() {
  std::string table;
  for (int id = 0; id < kSize; ++id) {
    table += symbol_name(id);
    table += '\n';
  }
  return fnv1a(table);
}

}  // namespace pcpg::vocab
