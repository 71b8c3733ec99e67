#include "pcpg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pcpg {

namespace {

constexpr char kMagic[8] = {'P', 'C', 'P', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kMaxStringLength = 1u << 20;
constexpr std::uint32_t kMaxDim = 1u << 24;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
  unsigned char buf[4];
  if (!is.read(reinterpret_cast<char*>(buf), 4))
    throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const char* what) {
  const std::uint32_t n = read_u32(is, what);
  if (n > kMaxStringLength)
    throw std::runtime_error(std::string("checkpoint: implausible string length for ") + what);
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n))
    throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return s;
}

}  // namespace

const std::string* Checkpoint::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

const ad::Matrix* Checkpoint::find_tensor(const std::string& name) const {
  for (const auto& [k, v] : tensors)
    if (k == name) return &v;
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw std::runtime_error("checkpoint: cannot open '" + path.string() + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, ckpt.version);
  write_u32(os, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [key, value] : ckpt.meta) {
    write_string(os, key);
    write_string(os, value);
  }
  write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    write_string(os, name);
    write_u32(os, static_cast<std::uint32_t>(tensor.rows()));
    write_u32(os, static_cast<std::uint32_t>(tensor.cols()));
    // row-major storage writes out verbatim
    os.write(reinterpret_cast<const char*>(tensor.data()),
             static_cast<std::streamsize>(sizeof(double) * tensor.size()));
  }
  if (!os) throw std::runtime_error("checkpoint: write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "'");
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: '" + path.string() + "' has a bad magic header");

  Checkpoint ckpt;
  ckpt.version = read_u32(is, "version");
  if (ckpt.version != 1)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(ckpt.version));
  const std::uint32_t meta_count = read_u32(is, "meta count");
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string key = read_string(is, "meta key");
    std::string value = read_string(is, "meta value");
    ckpt.meta.emplace_back(std::move(key), std::move(value));
  }
  const std::uint32_t tensor_count = read_u32(is, "tensor count");
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    std::string name = read_string(is, "tensor name");
    const std::uint32_t rows = read_u32(is, "tensor rows");
    const std::uint32_t cols = read_u32(is, "tensor cols");
    if (rows > kMaxDim || cols > kMaxDim)
      throw std::runtime_error("checkpoint: implausible tensor shape in '" + name + "'");
    ad::Matrix tensor(rows, cols);
    if (tensor.size() > 0 &&
        !is.read(reinterpret_cast<char*>(tensor.data()),
                 static_cast<std::streamsize>(sizeof(double) * tensor.size())))
      throw std::runtime_error("checkpoint: truncated tensor data in '" + name + "'");
    ckpt.tensors.emplace_back(std::move(name), std::move(tensor));
  }
  return ckpt;
}

}  // namespace pcpg
