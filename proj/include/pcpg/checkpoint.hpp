#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pcpg/tape.hpp"

namespace pcpg {

// On-disk layout (little-endian):
//   8 bytes   magic "PCPGCKPT"
//   u32       format version (currently 1)
//   u32       meta entry count
//   per meta: u32 key length, key bytes, u32 value length, value bytes
//   u32       tensor count
//   per tensor: u32 name length, name bytes, u32 rows, u32 cols,
//               rows*cols doubles, row-major
struct Checkpoint {
  std::uint32_t version = 1;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::pair<std::string, ad::Matrix>> tensors;

  const std::string* find_meta(const std::string& key) const;
  const ad::Matrix* find_tensor(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws std::runtime_error on missing file, bad magic, or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pcpg
