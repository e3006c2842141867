#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "multiroi/layers.hpp"

namespace multiroi {

struct EncoderSpec {
  std::string name;
  int feature_dim = 0;
  /// Smallest square input the encoder accepts.
  int min_input = 1;
};

/// vgg11, vgg16 (default), resnet18, resnet34, resnet50, plus two small
/// convolutional encoders ("tiny", "mini") for desk-scale runs and gradient checks.
const std::vector<EncoderSpec>& encoder_registry();
inline constexpr std::string_view kDefaultEncoder = "vgg16";

/// Throws UnknownEncoder.
const EncoderSpec& find_encoder(std::string_view name);

/// Convolutional trunk followed by global average pooling. Expects 3-channel input.
class Encoder {
 public:
  Encoder(EncoderSpec spec, std::vector<std::unique_ptr<Layer>> layers);

  const EncoderSpec& spec() const { return spec_; }
  int feature_dim() const { return spec_.feature_dim; }

  /// (N, 3, H, W) -> (N, feature_dim, 1, 1). Throws SpatialTooSmall / NonFiniteActivation.
  Tensor apply(const Tensor& x) const;
  Tensor forward(const Tensor& x);
  /// Switch decisions of every ReLU and max-pool for input x. Inputs (or weights) with
  /// equal patterns sit on the same linear piece of the trunk.
  std::vector<int> activation_pattern(const Tensor& x) const;
  void backward(const Tensor& grad_features);

  void collect(std::vector<Parameter*>& params);
  void collect(std::vector<const Parameter*>& params) const;

 private:
  void check_input(const Tensor& x) const;

  EncoderSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  GlobalAvgPool pool_;
};

std::unique_ptr<Encoder> build_encoder(std::string_view name, std::mt19937_64& rng);

}  // namespace multiroi
