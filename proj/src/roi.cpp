#include "multiroi/roi.hpp"

#include <algorithm>
#include <cmath>

#include "multiroi/errors.hpp"
#include "multiroi/hash.hpp"
#include "multiroi/kernels.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace {

constexpr std::array<std::string_view, kRoiCount> kRoiNames = {
    "CLAVICLE_L", "CLAVICLE_R", "CERVICAL", "RIBCAGE_L", "RIBCAGE_R", "T12", "CHEST_GLOBAL"};

double distance(const Point2& a, const Point2& b) { return std::hypot(b.x - a.x, b.y - a.y); }

[[noreturn]] void degenerate(RoiKind kind, std::string_view why) {
  throw Error(ErrorCode::DegenerateGeometry, "roi_extraction", "build_roi_geometry",
              std::string(roi_name(kind)) + ": " + std::string(why));
}

// Shift, then shrink about the center if shifting alone cannot bring the corners into range.
void fit_corners(OrientedBox& box) {
  constexpr double span = kCornerLimitHigh - kCornerLimitLow;
  auto extent = [&] {
    const auto c = box.corners();
    double minx = c[0].x, maxx = c[0].x, miny = c[0].y, maxy = c[0].y;
    for (const auto& p : c) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    return std::array<double, 4>{minx, maxx, miny, maxy};
  };
  auto e = extent();
  const double largest = std::max(e[1] - e[0], e[3] - e[2]);
  if (largest > span) {
    const double shrink = span / largest;
    box.width *= shrink;
    box.height *= shrink;
    e = extent();
  }
  if (e[0] < kCornerLimitLow) box.center.x += kCornerLimitLow - e[0];
  if (e[1] > kCornerLimitHigh) box.center.x -= e[1] - kCornerLimitHigh;
  if (e[2] < kCornerLimitLow) box.center.y += kCornerLimitLow - e[2];
  if (e[3] > kCornerLimitHigh) box.center.y -= e[3] - kCornerLimitHigh;
}

}  // namespace

std::string_view roi_name(RoiKind kind) { return kRoiNames[static_cast<int>(kind)]; }

std::optional<RoiKind> roi_from_name(std::string_view name) {
  for (int i = 0; i < kRoiCount; ++i) {
    if (kRoiNames[i] == name) return static_cast<RoiKind>(i);
  }
  return std::nullopt;
}

std::array<Point2, 4> OrientedBox::corners() const {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double hw = 0.5 * width;
  const double hh = 0.5 * height;
  std::array<Point2, 4> out;
  const double su[4] = {-hw, hw, hw, -hw};
  const double sv[4] = {-hh, -hh, hh, hh};
  for (int i = 0; i < 4; ++i) {
    out[i] = {center.x + su[i] * c - sv[i] * s, center.y + su[i] * s + sv[i] * c};
  }
  return out;
}

double GeometryConfig::aspect(RoiKind kind) const {
  switch (kind) {
    case RoiKind::ClavicleL:
    case RoiKind::ClavicleR: return aspect_clavicle;
    case RoiKind::RibcageL:
    case RoiKind::RibcageR: return aspect_ribcage;
    case RoiKind::Cervical: return aspect_cervical;
    case RoiKind::T12: return aspect_t12;
    case RoiKind::ChestGlobal: return 1.0;
  }
  return 1.0;
}

std::string GeometryConfig::hash() const {
  Fnv1a h;
  for (double v : {width_margin, point_roi_scale, aspect_clavicle, aspect_ribcage, aspect_cervical, aspect_t12}) {
    h.update(text::format_double(v)).update(";");
  }
  h.update(std::to_string(out_height)).update("x").update(std::to_string(out_width));
  return h.hex();
}

OrientedBox full_image_box() { return OrientedBox{{0.5, 0.5}, 0.0, 1.0, 1.0}; }

OrientedBox build_roi_geometry(const LandmarkSet& lm, RoiKind kind, const GeometryConfig& config) {
  if (kind == RoiKind::ChestGlobal) return full_image_box();

  OrientedBox box;
  const double aspect = config.aspect(kind);
  if (kind == RoiKind::Cervical || kind == RoiKind::T12) {
    const double scale = distance(lm[Landmark::ClavL1], lm[Landmark::ClavR1]);
    if (scale < kMinAxisLength) degenerate(kind, "CLAV_L_1 and CLAV_R_1 coincide");
    box.center = lm[kind == RoiKind::Cervical ? Landmark::Cerv1 : Landmark::T12_1];
    box.angle = 0.0;
    box.width = config.point_roi_scale * scale;
    box.height = box.width * aspect;
  } else {
    Landmark first{}, last{};
    switch (kind) {
      case RoiKind::ClavicleL: first = Landmark::ClavL1, last = Landmark::ClavL3; break;
      case RoiKind::ClavicleR: first = Landmark::ClavR1, last = Landmark::ClavR3; break;
      case RoiKind::RibcageL: first = Landmark::RibL1, last = Landmark::RibL4; break;
      default: first = Landmark::RibR1, last = Landmark::RibR4; break;
    }
    const Point2 a = lm[first];
    const Point2 b = lm[last];
    const double len = distance(a, b);
    if (len < kMinAxisLength) degenerate(kind, "axis landmarks coincide");
    box.center = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    box.angle = std::atan2(b.y - a.y, b.x - a.x);
    box.width = len * config.width_margin;
    box.height = box.width * aspect;
  }
  fit_corners(box);
  return box;
}

Image crop_and_normalize(const Image& image, const OrientedBox& box, int out_height, int out_width) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "roi_extraction", "crop_and_normalize", "");
  if (out_height <= 0 || out_width <= 0) {
    throw Error(ErrorCode::NonPositiveOutSize, "roi_extraction", "crop_and_normalize",
                std::to_string(out_height) + "x" + std::to_string(out_width));
  }
  const double c = std::cos(box.angle);
  const double s = std::sin(box.angle);
  const double iw = image.width;
  const double ih = image.height;
  const double du = box.width / out_width;    // normalized length per crop column
  const double dv = box.height / out_height;  // per crop row
  const double u0 = box.width * (0.5 / out_width - 0.5);
  const double v0 = box.height * (0.5 / out_height - 0.5);

  kernels::AffineMap map;
  map.xx = iw * c * du;
  map.xy = -iw * s * dv;
  map.x0 = iw * (box.center.x + c * u0 - s * v0) - 0.5;
  map.yx = ih * s * du;
  map.yy = ih * c * dv;
  map.y0 = ih * (box.center.y + s * u0 + c * v0) - 0.5;

  Image out(out_width, out_height);
  kernels::parallel::affine_sample(image, map, kernels::Border::Zero, out);
  for (float& p : out.pixels) p = std::clamp(p, 0.0F, 1.0F);
  return out;
}

RoiCropSet extract_all_rois(const Image& image, const LandmarkSet& landmarks, const GeometryConfig& config) {
  RoiCropSet set;
  for (RoiKind kind : kAllRois) {
    try {
      const OrientedBox box = build_roi_geometry(landmarks, kind, config);
      set[kind] = crop_and_normalize(image, box, config.out_height, config.out_width);
    } catch (const Error& e) {
      if (e.detail().rfind(roi_name(kind), 0) == 0) throw;
      throw e.with_context(roi_name(kind));
    }
  }
  return set;
}

}  // namespace multiroi
