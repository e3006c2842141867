#include "multiroi/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "multiroi/errors.hpp"
#include "multiroi/kernels.hpp"

namespace multiroi {

AugmentConfig AugmentConfig::identity() { return AugmentConfig{1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0}; }

bool AugmentConfig::is_identity() const {
  return scale_min == 1.0 && scale_max == 1.0 && rotate_min == 0.0 && rotate_max == 0.0 && translate_min == 0.0 &&
         translate_max == 0.0 && hflip_prob == 0.0;
}

void AugmentConfig::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCode::InvalidConfig, "training_engine", "augment", what); };
  if (!(scale_min > 0.0) || scale_min > scale_max) bad("scale range must be positive and ordered");
  if (rotate_min > rotate_max) bad("rotate range must be ordered");
  if (translate_min > translate_max) bad("translate range must be ordered");
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) bad("hflip_prob must lie in [0, 1]");
}

AugmentParams draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  AugmentParams p;
  p.scale = uniform(cfg.scale_min, cfg.scale_max);
  p.rotate_deg = uniform(cfg.rotate_min, cfg.rotate_max);
  p.tx = uniform(cfg.translate_min, cfg.translate_max);
  p.ty = uniform(cfg.translate_min, cfg.translate_max);
  p.hflip = std::bernoulli_distribution(cfg.hflip_prob)(rng);
  return p;
}

Point2 augment_point(const Point2& p, const AugmentParams& params) {
  const double th = params.rotate_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th);
  const double s = std::sin(th);
  const double dx = p.x - 0.5;
  const double dy = p.y - 0.5;
  Point2 q{0.5 + params.scale * (c * dx - s * dy) + params.tx, 0.5 + params.scale * (s * dx + c * dy) + params.ty};
  if (params.hflip) q.x = 1.0 - q.x;
  return q;
}

namespace {

// Inverse of augment_point, in normalized coordinates.
Point2 source_point(Point2 q, const AugmentParams& params) {
  if (params.hflip) q.x = 1.0 - q.x;
  const double th = params.rotate_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th);
  const double s = std::sin(th);
  const double dx = q.x - params.tx - 0.5;
  const double dy = q.y - params.ty - 0.5;
  return {0.5 + (c * dx + s * dy) / params.scale, 0.5 + (-s * dx + c * dy) / params.scale};
}

}  // namespace

std::pair<Image, LandmarkSet> apply_augment(const Image& image, const LandmarkSet& landmarks,
                                            const AugmentParams& params) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "training_engine", "augment", "");
  const double w = image.width;
  const double h = image.height;
  auto src_pixel = [&](double u, double v) {
    const Point2 p = source_point({(u + 0.5) / w, (v + 0.5) / h}, params);
    return Point2{p.x * w - 0.5, p.y * h - 0.5};
  };
  const Point2 o = src_pixel(0, 0);
  const Point2 du = src_pixel(1, 0);
  const Point2 dv = src_pixel(0, 1);
  kernels::AffineMap map;
  map.x0 = o.x;
  map.y0 = o.y;
  map.xx = du.x - o.x;
  map.yx = du.y - o.y;
  map.xy = dv.x - o.x;
  map.yy = dv.y - o.y;

  Image out(image.width, image.height);
  kernels::parallel::affine_sample(image, map, kernels::Border::Zero, out);

  LandmarkSet moved = landmarks;
  for (int i = 0; i < kLandmarkCount; ++i) {
    const auto lm = static_cast<Landmark>(i);
    Point2 q = augment_point(landmarks[lm], params);
    q.x = std::clamp(q.x, 0.0, 1.0);
    q.y = std::clamp(q.y, 0.0, 1.0);
    moved[params.hflip ? mirror_landmark(lm) : lm] = q;
  }
  return {std::move(out), moved};
}

std::pair<Image, LandmarkSet> augment(const Image& image, const LandmarkSet& landmarks, const AugmentConfig& cfg,
                                      std::mt19937_64& rng) {
  return apply_augment(image, landmarks, draw_augment(cfg, rng));
}

}  // namespace multiroi
