#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "multiroi/config.hpp"
#include "multiroi/manifest.hpp"
#include "multiroi/model.hpp"
#include "multiroi/predictions.hpp"
#include "multiroi/roi.hpp"

namespace multiroi {

/// Crops of the requested kinds only; the others stay empty.
RoiCropSet extract_rois(const Image& image, const LandmarkSet& landmarks, const GeometryConfig& geometry,
                        std::span<const RoiKind> kinds);

/// Reads a row's image and landmarks and extracts crops. When MULTIROI_BMD_CACHE names a
/// directory, crops are cached there keyed by image bytes, landmark bytes, geometry and kinds.
/// Throws DataLoadError(path).
RoiCropSet load_row_crops(const DatasetManifest& manifest, const ManifestRow& row, const GeometryConfig& geometry,
                          std::span<const RoiKind> kinds);

/// Crops held in memory, keyed by scan_id.
class CropStore {
 public:
  static CropStore load(const DatasetManifest& manifest, std::span<const ManifestRow* const> rows,
                        const GeometryConfig& geometry, std::span<const RoiKind> kinds, int workers = 1);

  const RoiCropSet* find(const std::string& scan_id) const;
  const GeometryConfig& geometry() const { return geometry_; }
  bool covers(std::span<const RoiKind> kinds) const;
  std::size_t size() const { return crops_.size(); }

 private:
  GeometryConfig geometry_;
  std::vector<RoiKind> kinds_;
  std::unordered_map<std::string, RoiCropSet> crops_;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double lr = 0.0;
  double wallclock = 0.0;
};

struct TrainResult {
  std::filesystem::path best_checkpoint;
  std::filesystem::path final_checkpoint;
  std::filesystem::path log_path;
  std::vector<EpochRecord> log;
  /// Mean loss of the initial weights over the training rows (NaN when epochs == 0).
  double initial_train_loss = 0.0;
  int best_epoch = 0;
};

/// Mean ground truth over rows of a split that have all four values.
BmdVector mean_target(const DatasetManifest& manifest, Split split);

/// Mini-batch SGD on the train rows, validation on the val rows. Writes
/// checkpoint_best/, checkpoint_final/ and train_log.jsonl under out_dir.
/// Rows lacking any ground-truth value are skipped. `store` (optional) supplies
/// pre-extracted crops; training rows are re-extracted when augmentation is on.
TrainResult train(const DatasetManifest& manifest, RoiModel& model, const TrainConfig& cfg,
                  const GeometryConfig& geometry, const std::filesystem::path& out_dir,
                  const CropStore* store = nullptr);

/// Predictions for every row of the split, in manifest order. No augmentation.
PredictionTable predict(const RoiModel& model, const DatasetManifest& manifest, Split split,
                        const GeometryConfig& geometry, const CropStore* store = nullptr, int batch_size = 64);

/// Loads a checkpoint and predicts. When `geometry` is given and its hash differs from the
/// checkpoint's, throws CheckpointMismatch if strict, otherwise warns and uses `geometry`.
PredictionTable predict_checkpoint(const std::filesystem::path& checkpoint, const DatasetManifest& manifest,
                                   Split split, const std::optional<GeometryConfig>& geometry = std::nullopt,
                                   bool strict = true, const CropStore* store = nullptr);

/// One JSON object per line.
std::string format_epoch_record(const EpochRecord& record);

}  // namespace multiroi
