#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "sparsekit/optim.hpp"

namespace sparsekit {

inline constexpr int kCheckpointVersion = 1;

/// On-disk layout: `dir/manifest.json` describing every tensor (path,
/// shape, dtype, mask encoding), the step counter and a config hash, plus
/// one little-endian binary file per tensor or mask.
struct Checkpoint {
  ParamTree params;
  OptState state;
  std::int64_t step = 0;
  std::string config_hash;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Writes to a sibling temporary directory and renames it into place.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& checkpoint);

/// Throws CheckpointError on missing, truncated, corrupt or
/// version-mismatched input; nothing is returned in that case.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Optimizer state only.
void save_state(const std::filesystem::path& dir, const OptState& state);
OptState load_state(const std::filesystem::path& dir);

/// 64-bit FNV-1a of `text` as 16 lowercase hex digits.
std::string config_hash(const std::string& text);

}  // namespace sparsekit
