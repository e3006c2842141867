#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>

#include "multiroi/hash.hpp"
#include "multiroi/kernels.hpp"
#include "multiroi/text.hpp"

namespace multiroi::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          ("multiroi_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

LandmarkSet uniform_landmarks(double x, double y) {
  LandmarkSet set;
  for (auto& p : set.points) p = {x, y};
  return set;
}

std::string landmark_text(const LandmarkSet& set, bool with_size) {
  std::string out;
  if (with_size) out += "SIZE " + std::to_string(set.image_width) + " " + std::to_string(set.image_height) + "\n";
  for (int i = 0; i < kLandmarkCount; ++i) {
    out += std::string(landmark_name(static_cast<Landmark>(i))) + " " + text::format_double(set.points[i].x) + " " +
           text::format_double(set.points[i].y) + "\n";
  }
  return out;
}

OrientedBox reference_box(const LandmarkSet& lm, RoiKind kind, const GeometryConfig& g) {
  auto line_box = [&](Landmark first, Landmark last, double aspect) {
    const Point2 a = lm[first], b = lm[last];
    const double len = std::sqrt((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y));
    OrientedBox box;
    box.center = {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
    box.angle = std::atan2(b.y - a.y, b.x - a.x);
    box.width = len * g.width_margin;
    box.height = box.width * aspect;
    return box;
  };
  auto point_box = [&](Landmark at) {
    const Point2 l = lm[Landmark::ClavL1], r = lm[Landmark::ClavR1];
    const double side = g.point_roi_scale * std::sqrt((r.x - l.x) * (r.x - l.x) + (r.y - l.y) * (r.y - l.y));
    const double aspect = at == Landmark::Cerv1 ? g.aspect_cervical : g.aspect_t12;
    return OrientedBox{lm[at], 0.0, side, side * aspect};
  };
  switch (kind) {
    case RoiKind::ClavicleL: return line_box(Landmark::ClavL1, Landmark::ClavL3, g.aspect_clavicle);
    case RoiKind::ClavicleR: return line_box(Landmark::ClavR1, Landmark::ClavR3, g.aspect_clavicle);
    case RoiKind::RibcageL: return line_box(Landmark::RibL1, Landmark::RibL4, g.aspect_ribcage);
    case RoiKind::RibcageR: return line_box(Landmark::RibR1, Landmark::RibR4, g.aspect_ribcage);
    case RoiKind::Cervical: return point_box(Landmark::Cerv1);
    case RoiKind::T12: return point_box(Landmark::T12_1);
    case RoiKind::ChestGlobal: return OrientedBox{{0.5, 0.5}, 0.0, 1.0, 1.0};
  }
  return {};
}

double brute_force_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

double direct_pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

namespace {

std::vector<double> midranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return direct_pearson(rx, ry);
}

PhantomSpec small_phantom(int n, std::uint64_t seed, int image_size) {
  PhantomSpec spec;
  spec.n_samples = n;
  spec.seed = seed;
  spec.image_size = image_size;
  return spec;
}

DatasetManifest split_phantom_dataset(const PhantomSpec& spec, const fs::path& dir, std::uint64_t seed) {
  DatasetManifest m = generate_dataset(spec, dir);
  m = patient_grouped_split(m, SplitRatios{}, seed);
  m.base_dir = dir;
  return m;
}

std::vector<PredictionTable> random_tables(std::mt19937_64& rng, int members, int rows) {
  std::uniform_real_distribution<double> bmd(0.5, 1.5);
  std::vector<PredictionTable> tables(members);
  for (int m = 0; m < members; ++m) {
    for (int r = 0; r < rows; ++r) {
      PredictionRow row;
      row.scan_id = "S" + std::to_string(r);
      row.patient_id = "P" + std::to_string(r / 2);
      for (double& v : row.bmd) v = std::round(bmd(rng) * 1000.0) / 1000.0;
      tables[m].rows.push_back(row);
    }
  }
  return tables;
}

RandomHeads random_heads(std::mt19937_64& rng, int heads, int batch) {
  std::normal_distribution<double> g(1.0, 0.3);
  RandomHeads out;
  out.pred.per_roi.assign(heads, std::vector<BmdVector>(batch));
  out.pred.concat.resize(batch);
  out.target.resize(batch);
  for (auto& head : out.pred.per_roi)
    for (auto& v : head)
      for (double& x : v) x = g(rng);
  for (auto& v : out.pred.concat)
    for (double& x : v) x = g(rng);
  for (auto& v : out.target)
    for (double& x : v) x = g(rng);
  return out;
}

Image rotate_image(const Image& src, double radians) {
  // Output pixel (u, v) samples the source at R(-theta) about the center (pixel-center units).
  const double c = std::cos(radians), s = std::sin(radians);
  const double cx = 0.5 * src.width - 0.5, cy = 0.5 * src.height - 0.5;
  kernels::AffineMap map;
  map.xx = c;
  map.xy = s;
  map.x0 = cx - c * cx - s * cy;
  map.yx = -s;
  map.yy = c;
  map.y0 = cy + s * cx - c * cy;
  Image dst(src.width, src.height);
  kernels::parallel::affine_sample(src, map, kernels::Border::Zero, dst);
  return dst;
}

LandmarkSet rotate_landmarks(const LandmarkSet& lm, double radians) {
  LandmarkSet out = lm;
  const double c = std::cos(radians), s = std::sin(radians);
  for (auto& p : out.points) {
    const double dx = p.x - 0.5, dy = p.y - 0.5;
    p = {0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy};
  }
  return out;
}

}  // namespace multiroi::testing
