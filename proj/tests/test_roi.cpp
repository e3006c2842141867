#include <cmath>
#include <numbers>

#include "criteria.hpp"
#include "doctest.h"
#include "multiroi/errors.hpp"
#include "multiroi/roi.hpp"
#include "support.hpp"

using namespace multiroi;
using namespace multiroi::testing;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("landmark file: 16 uniform points parse") {
  const LandmarkSet lm = parse_landmark_file(landmark_text(uniform_landmarks(0.5, 0.5)));
  for (const auto& p : lm.points) CHECK(p == Point2{0.5, 0.5});
  CHECK(lm.image_width == 0);
}

TEST_CASE("landmark file: errors") {
  std::string text = landmark_text(uniform_landmarks(0.5, 0.5));
  const auto t12 = text.find("T12_1");
  std::string missing = text.substr(0, t12);
  try {
    parse_landmark_file(missing);
    FAIL("expected MissingLandmark");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingLandmark);
    CHECK(e.detail().find("T12_1") != std::string::npos);
  }
  LandmarkSet bad = uniform_landmarks(0.5, 0.5);
  bad[Landmark::Cerv1] = {1.2, 0.3};
  CHECK(code_of([&] { parse_landmark_file(landmark_text(bad)); }) == ErrorCode::OutOfRangeCoordinate);
  CHECK(code_of([&] { parse_landmark_file(text + "CERV_1 0.4 0.4\n"); }) == ErrorCode::DuplicateLandmark);
  CHECK(code_of([&] { parse_landmark_file(text + "CERV_1 0.4\n"); }) == ErrorCode::MalformedLine);
}

TEST_CASE("landmark file: format/parse round trip with SIZE and comments") {
  LandmarkSet lm = uniform_landmarks(0.25, 0.75);
  lm[Landmark::RibR3] = {0.123456789012345, 0.987654321};
  lm.image_width = 512;
  lm.image_height = 400;
  CHECK(parse_landmark_file("# header\n" + format_landmark_file(lm)) == lm);
}

TEST_CASE("mirror_landmark swaps sides and keeps midline points") {
  CHECK(mirror_landmark(Landmark::ClavL2) == Landmark::ClavR2);
  CHECK(mirror_landmark(Landmark::RibR4) == Landmark::RibL4);
  CHECK(mirror_landmark(Landmark::Cerv1) == Landmark::Cerv1);
}

TEST_CASE("roi geometry: spec examples") {
  GeometryConfig g;
  LandmarkSet lm = uniform_landmarks(0.5, 0.5);
  lm[Landmark::ClavL1] = {0.2, 0.3};
  lm[Landmark::ClavL3] = {0.4, 0.3};
  OrientedBox box = build_roi_geometry(lm, RoiKind::ClavicleL, g);
  CHECK(box.angle == 0.0);
  CHECK(box.center.x == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(box.width == doctest::Approx(0.24).epsilon(1e-12));
  CHECK(std::abs(box.height / box.width - 1.0 / 3.0) <= kAspectTol);

  lm[Landmark::ClavL1] = {0.2, 0.2};
  lm[Landmark::ClavL3] = {0.4, 0.4};
  box = build_roi_geometry(lm, RoiKind::ClavicleL, g);
  CHECK(box.angle == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));

  CHECK(build_roi_geometry(lm, RoiKind::ChestGlobal, g).width == 1.0);
}

TEST_CASE("roi geometry: coincident axis landmarks are degenerate") {
  LandmarkSet lm = uniform_landmarks(0.5, 0.5);
  try {
    build_roi_geometry(lm, RoiKind::ClavicleL, GeometryConfig{});
    FAIL("expected DegenerateGeometry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
    CHECK(e.detail().find("CLAVICLE_L") != std::string::npos);
  }
}

TEST_CASE("roi geometry: boxes near the border are pulled inside the corner band") {
  LandmarkSet lm = uniform_landmarks(0.5, 0.5);
  lm[Landmark::RibL1] = {0.0, 0.0};
  lm[Landmark::RibL4] = {0.0, 1.0};
  const OrientedBox box = build_roi_geometry(lm, RoiKind::RibcageL, GeometryConfig{});
  for (const auto& c : box.corners()) {
    CHECK(c.x >= kCornerLimitLow - 1e-12);
    CHECK(c.x <= kCornerLimitHigh + 1e-12);
    CHECK(c.y >= kCornerLimitLow - 1e-12);
    CHECK(c.y <= kCornerLimitHigh + 1e-12);
  }
}

TEST_CASE("crop: constant image under a 90 degree box stays constant") {
  const Image flat(48, 48, 0.375F);
  const Image out = crop_and_normalize(flat, OrientedBox{{0.5, 0.5}, std::numbers::pi / 2, 0.5, 0.5}, 20, 20);
  for (float p : out.pixels) CHECK(p == doctest::Approx(0.375F));
}

TEST_CASE("crop: errors") {
  CHECK(code_of([] { crop_and_normalize(Image{}, full_image_box(), 4, 4); }) == ErrorCode::EmptyImage);
  CHECK(code_of([] { crop_and_normalize(Image(4, 4), full_image_box(), 0, 4); }) == ErrorCode::NonPositiveOutSize);
}

TEST_CASE("extract_all_rois: seven 256x256 crops, deterministic") {
  std::mt19937_64 rng(2);
  const PhantomSample s = generate_phantom(small_phantom(1, 2, 256), rng);
  const RoiCropSet a = extract_all_rois(s.image, s.landmarks, GeometryConfig{});
  for (const Image& c : a.crops) {
    CHECK(c.width == 256);
    CHECK(c.height == 256);
  }
  CHECK(extract_all_rois(s.image, s.landmarks, GeometryConfig{}) == a);
}

TEST_CASE("geometry criterion") {
  const CheckResult r = check_geometry(11);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("crop: resizing the image barely changes local crops") {
  std::mt19937_64 rng(12);
  const PhantomSample s = generate_phantom(small_phantom(1, 12, 512), rng);
  GeometryConfig g;
  g.out_height = 64;
  g.out_width = 64;
  for (int side : {384, 640}) {
    const Image resized = resize_bilinear(s.image, side, side);
    for (RoiKind kind : kLocalRois) {
      const OrientedBox box = build_roi_geometry(s.landmarks, kind, g);
      const double err = mean_abs_diff(crop_and_normalize(s.image, box, 64, 64), crop_and_normalize(resized, box, 64, 64));
      INFO(roi_name(kind), " at ", side, ": ", err * 255);
      CHECK(err < 4.0 / 255.0);
    }
  }
}

TEST_CASE("phantom landmarks survive a format/parse round trip") {
  std::mt19937_64 rng(13);
  const PhantomSpec spec = small_phantom(1, 13, 128);
  for (int i = 0; i < 25; ++i) {
    const PhantomSample s = generate_phantom(spec, rng);
    CHECK(parse_landmark_file(format_landmark_file(s.landmarks)) == s.landmarks);
  }
}
