#pragma once

// Binary checkpoints: a versioned header (magic, format version, config
// hash, layout table) followed by little-endian f64 parameter values and
// named auxiliary vectors (optimizer moments, normalizer statistics).

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hyperpp/net.hpp"

namespace hyperpp {

inline constexpr std::string_view kCheckpointMagic{"HYPERPP\0", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::uint64_t config_hash = 0;
  ParamStore params;
  std::vector<std::pair<std::string, Vector>> aux;

  /// nullptr when absent.
  const Vector* find_aux(std::string_view name) const noexcept;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError on a bad magic, unknown version or truncation.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hyperpp
