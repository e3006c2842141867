#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace multiroi {

enum class Split { Train, Val, Test, Unset };

std::string_view split_name(Split split);
std::optional<Split> split_from_name(std::string_view name);

struct ManifestRow {
  std::string scan_id;
  std::string patient_id;
  std::string image_path;
  std::string landmark_path;
  /// Ground-truth L1..L4 BMD in g/cm^2; nullopt when missing.
  std::array<std::optional<double>, 4> gt{};
  Split split = Split::Unset;

  bool has_all_gt() const;
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;
  /// Relative image/landmark paths resolve against this directory.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  std::vector<const ManifestRow*> rows_in(Split split) const;
  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) { return a.rows == b.rows; }
};

inline constexpr std::string_view kManifestHeader =
    "scan_id,patient_id,image_path,landmark_path,gt_L1,gt_L2,gt_L3,gt_L4,split";

/// Throws MalformedManifest(line). With check_paths, every referenced file must exist.
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {},
                               bool check_paths = false);
std::string format_manifest(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path, bool lazy = false);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct SplitRatios {
  double train = 1087.0 / 1681.0;
  double val = 265.0 / 1681.0;
  double test = 329.0 / 1681.0;
};

/// Assigns split tags patient by patient (every scan of a patient shares a tag).
/// Cumulative scan counts land within one patient's scans of the targets.
/// Throws EmptyManifest / InvalidConfig.
DatasetManifest patient_grouped_split(const DatasetManifest& manifest, const SplitRatios& ratios,
                                      std::uint64_t seed);

}  // namespace multiroi
