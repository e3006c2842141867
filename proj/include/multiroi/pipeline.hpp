#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "multiroi/config.hpp"
#include "multiroi/manifest.hpp"
#include "multiroi/metrics.hpp"
#include "multiroi/predictions.hpp"
#include "multiroi/train.hpp"

namespace multiroi {

/// Settings used by repro-synthetic unless overridden: tiny encoder, 64x64 crops,
/// 20 epochs, no augmentation, 2000 phantoms.
RunConfig repro_defaults();

TScoreTable load_tscore_table(const RunConfig& config);

/// Trains config.model on the manifest's train/val rows. The output-head bias starts
/// at the mean training target. Writes the run stamp and checkpoints under out_dir.
TrainResult train_run(const RunConfig& config, const DatasetManifest& manifest, const std::filesystem::path& out_dir,
                      const CropStore* store = nullptr);

struct ModelOutcome {
  std::string name;
  PredictionTable predictions;
  EvalReport report;
  TrainResult training;
  double seconds = 0.0;
};

struct ReproResult {
  std::filesystem::path out_dir;
  std::size_t n_scans = 0;
  std::array<std::size_t, 3> split_sizes{};  // train, val, test
  double synth_seconds = 0.0;
  double crop_seconds = 0.0;
  double total_seconds = 0.0;
  ModelOutcome multi;
  std::vector<ModelOutcome> baselines;
  std::optional<EvalReport> ensemble_roi;
  std::optional<EvalReport> ensemble_all;

  /// Wall time of synthesis, cropping and the multi-ROI model alone.
  double multi_pipeline_seconds() const { return synth_seconds + crop_seconds + multi.seconds; }
  const ModelOutcome* best_baseline() const;
};

struct ReproOptions {
  RunConfig config = repro_defaults();
  bool baselines = true;
  /// Reuse output_dir/data when it was generated from the same phantom settings.
  bool reuse_data = true;
  bool quiet = false;
};

/// synth -> split -> train -> predict -> evaluate, plus baselines and both ensembles.
/// Writes report.md and report.json under config.output_dir.
ReproResult run_repro_synthetic(const ReproOptions& options);

std::string format_repro_report(const ReproResult& result);

}  // namespace multiroi
