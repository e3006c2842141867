#pragma once

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "multiroi/landmarks.hpp"
#include "multiroi/manifest.hpp"
#include "multiroi/model.hpp"
#include "multiroi/phantom.hpp"
#include "multiroi/predictions.hpp"
#include "multiroi/roi.hpp"

namespace multiroi::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

LandmarkSet uniform_landmarks(double x, double y);
std::string landmark_text(const LandmarkSet& set, bool with_size = false);

/// Independent reference for the box rule (no corner fitting).
OrientedBox reference_box(const LandmarkSet& lm, RoiKind kind, const GeometryConfig& g);

/// O(n^2) pair counting with ties worth one half.
double brute_force_auc(std::span<const double> scores, std::span<const int> labels);
/// Textbook two-pass product-moment formula.
double direct_pearson(std::span<const double> x, std::span<const double> y);

/// Rank correlation with midranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

/// Small phantom spec that renders quickly.
PhantomSpec small_phantom(int n, std::uint64_t seed, int image_size = 128);

/// Writes a phantom dataset and tags it with a patient-grouped split.
DatasetManifest split_phantom_dataset(const PhantomSpec& spec, const std::filesystem::path& dir, std::uint64_t seed);

/// Random prediction tables over the same scan ids (values rounded to 1e-3 to force ties).
std::vector<PredictionTable> random_tables(std::mt19937_64& rng, int members, int rows);

/// Random multi-ROI batch prediction and matching target.
struct RandomHeads {
  MultiHeadPrediction pred;
  std::vector<BmdVector> target;
};
RandomHeads random_heads(std::mt19937_64& rng, int heads, int batch);

Image rotate_image(const Image& src, double radians);
LandmarkSet rotate_landmarks(const LandmarkSet& lm, double radians);

}  // namespace multiroi::testing
