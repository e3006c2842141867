#pragma once

#include <random>
#include <utility>

#include "multiroi/image.hpp"
#include "multiroi/landmarks.hpp"

namespace multiroi {

/// Ranges are inclusive [min, max]; rotation in degrees, translation as a fraction of the image.
struct AugmentConfig {
  double scale_min = 0.9;
  double scale_max = 1.1;
  double rotate_min = -10.0;
  double rotate_max = 10.0;
  double translate_min = -0.05;
  double translate_max = 0.05;
  double hflip_prob = 0.5;

  static AugmentConfig identity();
  bool is_identity() const;
  /// Throws InvalidConfig.
  void validate() const;
};

/// One draw of the augmentation parameters.
struct AugmentParams {
  double scale = 1.0;
  double rotate_deg = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  bool hflip = false;
};

AugmentParams draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng);

/// Applies scale and rotation about the image center, then translation, then an
/// optional horizontal mirror, to the pixels and landmarks together. Mirroring
/// swaps the L/R landmark names. Landmarks leaving the frame are pinned to its border.
std::pair<Image, LandmarkSet> apply_augment(const Image& image, const LandmarkSet& landmarks,
                                            const AugmentParams& params);

std::pair<Image, LandmarkSet> augment(const Image& image, const LandmarkSet& landmarks, const AugmentConfig& cfg,
                                      std::mt19937_64& rng);

/// Forward map of normalized coordinates under params (before any name swap).
Point2 augment_point(const Point2& p, const AugmentParams& params);

}  // namespace multiroi
