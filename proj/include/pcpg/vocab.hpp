#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pcpg::vocab {

// Fixed 40-symbol vocabulary: padding, begin, end, space, 26 letters, 10 digits.
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kSpace = 3;
inline constexpr int kFirstLetter = 4;   // 'a' .. 'z' -> 4 .. 29
inline constexpr int kFirstDigit = 30;   // '0' .. '9' -> 30 .. 39
inline constexpr int kSize = 40;

bool is_control(int id);                  // pad / bos / eos
bool is_valid(int id);
int from_char(char c);                    // throws on characters outside the table
char to_char(int id);                     // printable ids only; throws on control ids
std::string symbol_name(int id);          // display name, e.g. "<pad>", "a", "7"

// FNV-1a hash over the symbol table; persisted in dataset headers so files
// generated against a different table are rejected at load.
std::uint64_t table_hash();

}  // namespace pcpg::vocab
