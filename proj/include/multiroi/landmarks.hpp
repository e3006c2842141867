#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace multiroi {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// The 16 anchor points. "L"/"R" refer to image-left / image-right.
enum class Landmark : int {
  ClavL1, ClavL2, ClavL3,
  ClavR1, ClavR2, ClavR3,
  RibL1, RibL2, RibL3, RibL4,
  RibR1, RibR2, RibR3, RibR4,
  Cerv1,
  T12_1,
};

inline constexpr int kLandmarkCount = 16;

std::string_view landmark_name(Landmark lm);
std::optional<Landmark> landmark_from_name(std::string_view name);
/// Left/right counterpart with the same index (CLAV_L_2 <-> CLAV_R_2); midline points map to themselves.
Landmark mirror_landmark(Landmark lm);

/// Landmark coordinates are normalized to [0, 1]^2 (x to the right, y down).
/// image_width / image_height are 0 when the file carried no SIZE line.
struct LandmarkSet {
  std::array<Point2, kLandmarkCount> points{};
  int image_width = 0;
  int image_height = 0;

  const Point2& operator[](Landmark lm) const { return points[static_cast<int>(lm)]; }
  Point2& operator[](Landmark lm) { return points[static_cast<int>(lm)]; }

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

/// Parses `NAME x y` lines (order-insensitive, `#` comments, optional `SIZE w h`).
/// Throws Error with MissingLandmark, DuplicateLandmark, OutOfRangeCoordinate or MalformedLine.
LandmarkSet parse_landmark_file(std::string_view text);

std::string format_landmark_file(const LandmarkSet& set);

LandmarkSet load_landmark_file(const std::string& path);
void save_landmark_file(const std::string& path, const LandmarkSet& set);

}  // namespace multiroi
