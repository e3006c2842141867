#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "multiroi/model.hpp"
#include "multiroi/roi.hpp"

namespace multiroi {

inline constexpr int kCheckpointFormat = 1;

struct CheckpointMeta {
  int format_version = kCheckpointFormat;
  std::uint64_t seed = 0;
  int epoch = 0;
  GeometryConfig geometry;
  std::string version = MULTIROI_VERSION;
};

/// Directory layout: weights.bin (raw little-endian doubles per named parameter),
/// model.json (ModelSpec) and metadata.json. Round trips are bit-exact.
void save_checkpoint(const RoiModel& model, const CheckpointMeta& meta, const std::filesystem::path& dir);

struct LoadedCheckpoint {
  std::unique_ptr<RoiModel> model;
  CheckpointMeta meta;
  /// Geometry hash recorded at save time.
  std::string geometry_hash;
};

/// Throws CheckpointMismatch on a corrupt or incompatible directory, IoError when unreadable.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

/// Overwrites parameters with those stored in dir; names and sizes must match.
void load_weights(RoiModel& model, const std::filesystem::path& dir);

}  // namespace multiroi
