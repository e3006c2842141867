#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "multiroi/augment.hpp"
#include "multiroi/phantom.hpp"
#include "multiroi/roi.hpp"

namespace multiroi {

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 4e-4;
  int batch_size = 64;
  int epochs = 100;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  bool augment_enabled = true;
  int eval_every = 1;
  /// Data-loading threads; results do not depend on this.
  int workers = 1;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Everything a run needs. Serialized as flat `dotted.key = value` lines.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string model = "multi";
  std::string encoder = "vgg16";
  GeometryConfig geometry;
  TrainConfig train;
  PhantomSpec phantom;
  /// Empty means the built-in synthetic table.
  std::string tscore_table;
  std::string output_dir = "runs/default";

  /// Sets one dotted key. Throws InvalidConfig for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// All keys with their current values, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

/// `key = value` lines; `#` starts a comment. Later lines override earlier ones.
RunConfig parse_config(std::string_view text, RunConfig base = {});
std::string format_config(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Writes config.txt (resolved config) and version.txt into dir.
void write_run_stamp(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace multiroi
