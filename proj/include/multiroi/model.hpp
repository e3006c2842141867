#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "multiroi/encoder.hpp"
#include "multiroi/roi.hpp"

namespace multiroi {

inline constexpr int kVertebrae = 4;  // L1..L4
using BmdVector = std::array<double, kVertebrae>;

/// Which ROIs a model consumes and how its heads combine.
///   multi_head = true : shared per-ROI head + separate head on the concatenated features
///   multi_head = false: shared per-ROI head, final output = mean of the per-ROI outputs
struct ModelSpec {
  std::string name;
  std::string encoder = std::string(kDefaultEncoder);
  std::vector<RoiKind> inputs;
  bool multi_head = false;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

ModelSpec multi_roi_spec(std::string_view encoder = kDefaultEncoder);
ModelSpec single_roi_spec(RoiKind kind, std::string_view encoder = kDefaultEncoder);
/// Table-style baselines: cervi, clavi (L+R), lumbar (T12), ribcage (L+R), chest.
ModelSpec baseline_spec(std::string_view name, std::string_view encoder = kDefaultEncoder);
const std::vector<std::string>& baseline_names();
/// Accepts "multi", a baseline name, or an ROI name such as CLAVICLE_L.
ModelSpec model_spec_from_name(std::string_view name, std::string_view encoder = kDefaultEncoder);

/// per_roi[k][b] is the shared-head output for input k of sample b; concat[b] is the
/// model output (the concatenated-feature head, or the per-ROI mean for single models).
struct MultiHeadPrediction {
  std::vector<std::vector<BmdVector>> per_roi;
  std::vector<BmdVector> concat;

  int batch() const { return static_cast<int>(concat.size()); }
};

/// Stacks the model's input crops into a (batch * inputs, 1, H, W) tensor, sample-major.
/// Throws MissingRoi when a required crop is empty.
Tensor stack_rois(std::span<const RoiCropSet> samples, const ModelSpec& spec);

inline constexpr double kInputGain = 4.0;

/// Subtracts each crop's mean intensity and scales by kInputGain.
Tensor center_crops(const Tensor& x);

/// Single-channel batch -> three identical channels.
Tensor triplicate_channels(const Tensor& x);

/// Mean over all heads (per-ROI heads and the output head) of each head's MSE,
/// each MSE averaged over batch and vertebrae. Throws ShapeMismatch.
double multihead_loss(const MultiHeadPrediction& pred, std::span<const BmdVector> target);
double mse(std::span<const BmdVector> pred, std::span<const BmdVector> target);

class RoiModel {
 public:
  RoiModel(ModelSpec spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  int input_count() const { return static_cast<int>(spec_.inputs.size()); }
  int feature_dim() const { return encoder_->feature_dim(); }

  /// Encoder features for a stacked ROI tensor (single channel; triplicated internally).
  Tensor encode(const Tensor& rois) const;
  /// Encoder::activation_pattern on the adapted input.
  std::vector<int> activation_pattern(const Tensor& rois) const;

  MultiHeadPrediction infer(const Tensor& rois) const;
  MultiHeadPrediction infer(std::span<const RoiCropSet> samples) const;
  std::vector<BmdVector> predict_bmd(std::span<const RoiCropSet> samples) const;

  /// Training path: caches activations for backward().
  MultiHeadPrediction forward(const Tensor& rois);
  /// Loss of the last forward() against target; accumulates gradients. Throws NonFiniteActivation.
  double backward(const MultiHeadPrediction& pred, std::span<const BmdVector> target);

  void zero_grad();
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  /// Initial output bias, e.g. the training-set mean BMD.
  void set_output_bias(const BmdVector& bias);

  const Encoder& encoder_for(RoiKind kind) const;
  const Linear& head_for(RoiKind kind) const;
  const Linear* concat_head() const { return concat_head_.get(); }

 private:
  MultiHeadPrediction assemble(const Tensor& head_out, const Tensor* concat_out, int batch) const;
  int index_of(RoiKind kind) const;

  ModelSpec spec_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<Linear> shared_head_;
  std::unique_ptr<Linear> concat_head_;
};

}  // namespace multiroi
