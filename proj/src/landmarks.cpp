#include "multiroi/landmarks.hpp"

#include <bitset>
#include <cmath>

#include "multiroi/errors.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace {

constexpr std::array<std::string_view, kLandmarkCount> kNames = {
    "CLAV_L_1", "CLAV_L_2", "CLAV_L_3", "CLAV_R_1", "CLAV_R_2", "CLAV_R_3",
    "RIB_L_1",  "RIB_L_2",  "RIB_L_3",  "RIB_L_4",  "RIB_R_1",  "RIB_R_2",
    "RIB_R_3",  "RIB_R_4",  "CERV_1",   "T12_1",
};

[[noreturn]] void fail(ErrorCode code, std::string detail) {
  throw Error(code, "roi_extraction", "parse_landmark_file", std::move(detail));
}

}  // namespace

std::string_view landmark_name(Landmark lm) { return kNames[static_cast<int>(lm)]; }

std::optional<Landmark> landmark_from_name(std::string_view name) {
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (kNames[i] == name) return static_cast<Landmark>(i);
  }
  return std::nullopt;
}

Landmark mirror_landmark(Landmark lm) {
  const int i = static_cast<int>(lm);
  if (i <= 2) return static_cast<Landmark>(i + 3);
  if (i <= 5) return static_cast<Landmark>(i - 3);
  if (i >= 6 && i <= 9) return static_cast<Landmark>(i + 4);
  if (i >= 10 && i <= 13) return static_cast<Landmark>(i - 4);
  return lm;
}

LandmarkSet parse_landmark_file(std::string_view text) {
  LandmarkSet set;
  std::bitset<kLandmarkCount> seen;
  int line_no = 0;
  for (std::string_view raw : text::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;

    const auto parts = text::tokens(line);
    if (parts.size() != 3) fail(ErrorCode::MalformedLine, "line " + std::to_string(line_no));

    if (parts[0] == "SIZE") {
      const auto w = text::parse_int(parts[1]);
      const auto h = text::parse_int(parts[2]);
      if (!w || !h || *w <= 0 || *h <= 0) fail(ErrorCode::MalformedLine, "line " + std::to_string(line_no));
      set.image_width = static_cast<int>(*w);
      set.image_height = static_cast<int>(*h);
      continue;
    }

    const auto lm = landmark_from_name(parts[0]);
    const auto x = text::parse_double(parts[1]);
    const auto y = text::parse_double(parts[2]);
    if (!lm || !x || !y) fail(ErrorCode::MalformedLine, "line " + std::to_string(line_no));

    const int idx = static_cast<int>(*lm);
    if (seen.test(idx)) fail(ErrorCode::DuplicateLandmark, std::string(parts[0]));
    for (double v : {*x, *y}) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        fail(ErrorCode::OutOfRangeCoordinate, std::string(parts[0]) + " = " + text::format_double(v));
      }
    }
    seen.set(idx);
    set.points[idx] = {*x, *y};
  }
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (!seen.test(i)) fail(ErrorCode::MissingLandmark, std::string(kNames[i]));
  }
  return set;
}

std::string format_landmark_file(const LandmarkSet& set) {
  std::string out;
  if (set.image_width > 0 && set.image_height > 0) {
    out += "SIZE " + std::to_string(set.image_width) + " " + std::to_string(set.image_height) + "\n";
  }
  for (int i = 0; i < kLandmarkCount; ++i) {
    out += std::string(kNames[i]) + " " + text::format_double(set.points[i].x) + " " +
           text::format_double(set.points[i].y) + "\n";
  }
  return out;
}

LandmarkSet load_landmark_file(const std::string& path) {
  try {
    return parse_landmark_file(text::read_file(path));
  } catch (const Error& e) {
    throw e.with_context(path);
  }
}

void save_landmark_file(const std::string& path, const LandmarkSet& set) {
  text::write_file(path, format_landmark_file(set));
}

}  // namespace multiroi
