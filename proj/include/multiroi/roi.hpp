#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "multiroi/image.hpp"
#include "multiroi/landmarks.hpp"

namespace multiroi {

enum class RoiKind : int { ClavicleL, ClavicleR, Cervical, RibcageL, RibcageR, T12, ChestGlobal };

inline constexpr int kRoiCount = 7;
inline constexpr std::array<RoiKind, kRoiCount> kAllRois = {
    RoiKind::ClavicleL, RoiKind::ClavicleR, RoiKind::Cervical, RoiKind::RibcageL,
    RoiKind::RibcageR,  RoiKind::T12,       RoiKind::ChestGlobal};

std::string_view roi_name(RoiKind kind);  // "CLAVICLE_L", ...
std::optional<RoiKind> roi_from_name(std::string_view name);

/// Box in normalized image coordinates. The box axis (angle, measured from the
/// image x-axis towards +y) maps to the crop's x-axis; width is measured along it.
struct OrientedBox {
  Point2 center;
  double angle = 0.0;
  double width = 1.0;
  double height = 1.0;

  std::array<Point2, 4> corners() const;
};

/// Box construction parameters. Aspect values are height/width.
struct GeometryConfig {
  double width_margin = 1.2;
  double point_roi_scale = 0.35;
  double aspect_clavicle = 1.0 / 3.0;
  double aspect_ribcage = 3.0 / 2.0;
  double aspect_cervical = 1.0;
  double aspect_t12 = 1.0;
  int out_height = 256;
  int out_width = 256;

  double aspect(RoiKind kind) const;
  /// Stable digest of every field; stored in checkpoints and crop-cache keys.
  std::string hash() const;
};

/// Corners are kept inside this band; boxes are shifted (and if need be shrunk) to fit.
inline constexpr double kCornerLimitLow = -0.25;
inline constexpr double kCornerLimitHigh = 1.25;
inline constexpr double kMinAxisLength = 1e-6;

/// Landmark-anchored box for one local ROI. CHEST_GLOBAL yields the full-image box.
/// Throws DegenerateGeometry when the axis-defining landmarks coincide.
OrientedBox build_roi_geometry(const LandmarkSet& landmarks, RoiKind kind, const GeometryConfig& config);

OrientedBox full_image_box();

/// Bilinear resampling of the box interior into an out_height x out_width crop,
/// zero outside the image, output clamped to [0, 1].
Image crop_and_normalize(const Image& image, const OrientedBox& box, int out_height, int out_width);

struct RoiCropSet {
  std::array<Image, kRoiCount> crops;

  const Image& operator[](RoiKind kind) const { return crops[static_cast<int>(kind)]; }
  Image& operator[](RoiKind kind) { return crops[static_cast<int>(kind)]; }
  friend bool operator==(const RoiCropSet&, const RoiCropSet&) = default;
};

RoiCropSet extract_all_rois(const Image& image, const LandmarkSet& landmarks, const GeometryConfig& config);

}  // namespace multiroi
