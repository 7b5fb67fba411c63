#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cliniseq/tensor.hpp"

namespace cliniseq::ckpt {

inline constexpr std::string_view kMagic = "CLNT";
inline constexpr std::uint32_t kFormatVersion = 1;

// Named tensors plus key=value metadata. Values are stored as 32-bit floats
// and widened to 64 bits on load.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  bool has(std::string_view name) const;
  // Throws CompatibilityError when absent.
  const Tensor& tensor(std::string_view name) const;
  void add(std::string name, Tensor t);

  std::optional<std::string> meta(const std::string& key) const;
  // Throws CompatibilityError when absent.
  const std::string& require_meta(const std::string& key) const;
  double meta_real(const std::string& key) const;
  std::size_t meta_size(const std::string& key) const;
};

// Layout: magic, u32 version, u32-length-prefixed metadata block of sorted
// "key=value\n" lines, u32 tensor count, then per tensor a u32-length-prefixed
// name, u32 rank, u32 dims and f32 values, all little-endian.
std::string serialize(const Checkpoint& c);
// Throws CompatibilityError on a malformed or foreign payload.
Checkpoint deserialize(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Rounds every value to the nearest 32-bit float, as a save/load would.
Tensor round_to_f32(const Tensor& t);

}  // namespace cliniseq::ckpt
