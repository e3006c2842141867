#include "multiroi/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "multiroi/errors.hpp"
#include "multiroi/hash.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::array<double, 4> kVertebraOffset = {-0.045, -0.015, 0.015, 0.045};
constexpr double kVertebraSpread = 0.02;
// Texture extends slightly past each box so crops are textured edge to edge.
constexpr double kTextureMargin = 0.03;
// Lung distractor stays this far (in box units) from every ROI box.
constexpr double kDistractorClearance = 0.15;
constexpr double kDistractorPeriod = 0.02;
// Whole-body pose variation scales with the landmark jitter (about +-2% size, +-1% shift by default).
constexpr double kPoseScalePerJitter = 10.0 / 3.0;
constexpr double kPoseShiftPerJitter = 5.0 / 3.0;

// Nominal layout before per-scan pose and jitter; L is image-left.
constexpr std::array<Point2, kLandmarkCount> kLayout = {{
    {0.16, 0.30}, {0.27, 0.315}, {0.36, 0.335},
    {0.84, 0.30}, {0.73, 0.315}, {0.64, 0.335},
    {0.19, 0.44}, {0.18, 0.493}, {0.18, 0.547}, {0.19, 0.60},
    {0.81, 0.44}, {0.82, 0.493}, {0.82, 0.547}, {0.81, 0.60},
    {0.5, 0.16},
    {0.5, 0.70},
}};

struct Pose {
  double scale = 1.0;
  Point2 shift;
  Point2 apply(Point2 p) const {
    return {0.5 + scale * (p.x - 0.5) + shift.x, 0.5 + scale * (p.y - 0.5) + shift.y};
  }
};

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

class Canvas {
 public:
  explicit Canvas(int size) : size_(size), px_(static_cast<std::size_t>(size) * size, 0.0) {}

  int size() const { return size_; }
  double& at(int x, int y) { return px_[static_cast<std::size_t>(y) * size_ + x]; }
  Point2 center(int x, int y) const { return {(x + 0.5) / size_, (y + 0.5) / size_}; }

  // Visits pixels whose centers fall in [x0, x1] x [y0, y1] (normalized).
  template <typename F>
  void visit(double x0, double x1, double y0, double y1, F&& fn) {
    const int ix0 = std::max(0, static_cast<int>(std::floor(x0 * size_)));
    const int ix1 = std::min(size_ - 1, static_cast<int>(std::ceil(x1 * size_)));
    const int iy0 = std::max(0, static_cast<int>(std::floor(y0 * size_)));
    const int iy1 = std::min(size_ - 1, static_cast<int>(std::ceil(y1 * size_)));
    for (int y = iy0; y <= iy1; ++y) {
      for (int x = ix0; x <= ix1; ++x) fn(x, y, center(x, y));
    }
  }

  void ridge(Point2 a, Point2 b, double sigma, double peak) {
    const double reach = 3.0 * sigma;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = std::max(dx * dx + dy * dy, 1e-12);
    visit(std::min(a.x, b.x) - reach, std::max(a.x, b.x) + reach, std::min(a.y, b.y) - reach,
          std::max(a.y, b.y) + reach, [&](int x, int y, Point2 p) {
            const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
            const double ex = p.x - (a.x + t * dx), ey = p.y - (a.y + t * dy);
            const double d2 = ex * ex + ey * ey;
            if (d2 < reach * reach) at(x, y) += peak * std::exp(-0.5 * d2 / (sigma * sigma));
          });
  }

  Image to_image() const {
    Image img(size_, size_);
    for (std::size_t i = 0; i < px_.size(); ++i) img.pixels[i] = static_cast<float>(std::clamp(px_[i], 0.0, 1.0));
    return img;
  }

 private:
  int size_;
  std::vector<double> px_;
};

double ellipse_radius(Point2 p, Point2 c, double rx, double ry) {
  const double ux = (p.x - c.x) / rx, uy = (p.y - c.y) / ry;
  return std::sqrt(ux * ux + uy * uy);
}

// Box-frame coordinates scaled to [-0.5, 0.5] inside the box.
struct BoxFrame {
  OrientedBox box;
  double c, s;
  explicit BoxFrame(const OrientedBox& b) : box(b), c(std::cos(b.angle)), s(std::sin(b.angle)) {}
  Point2 local(Point2 p) const {
    const double rx = p.x - box.center.x, ry = p.y - box.center.y;
    return {(rx * c + ry * s) / box.width, (-rx * s + ry * c) / box.height};
  }
  bool contains(Point2 p, double margin) const {
    const Point2 q = local(p);
    return std::abs(q.x) <= 0.5 + margin && std::abs(q.y) <= 0.5 + margin;
  }
};

}  // namespace

void PhantomSpec::validate() const {
  auto bad = [](std::string detail) {
    throw Error(ErrorCode::InvalidConfig, "synthetic_phantom", "validate", std::move(detail));
  };
  if (image_size < 16) bad("image_size must be >= 16");
  if (n_samples < 0) bad("n_samples must be >= 0");
  double sum = 0.0;
  for (double f : signal_split) {
    if (!(f >= 0.0)) bad("signal_split fractions must be nonnegative");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) bad("signal_split must sum to 1, got " + text::format_double(sum));
  if (!(noise_level >= 0.0)) bad("noise_level must be >= 0");
  if (!(bmd_min > 0.0 && bmd_min < bmd_max && bmd_max < 3.0)) bad("bmd range must satisfy 0 < min < max < 3");
  if (!(base_amplitude >= 0.0 && amplitude_gain > 0.0)) bad("texture amplitudes must be positive");
  if (!(texture_cycles > 0.0)) bad("texture_cycles must be positive");
  if (!(distractor_max >= 0.0 && pixel_noise >= 0.0 && landmark_jitter >= 0.0)) bad("noise terms must be >= 0");
  if (!(repeat_fraction >= 0.0 && repeat_fraction <= 1.0)) bad("repeat_fraction must be in [0, 1]");
}

double mean_bmd(const BmdVector& bmd) { return 0.25 * (bmd[0] + bmd[1] + bmd[2] + bmd[3]); }

PatientLatent draw_patient(const PhantomSpec& spec, std::mt19937_64& rng) {
  PatientLatent p;
  std::uniform_real_distribution<double> level(spec.bmd_min, spec.bmd_max);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double c = level(rng);
  for (int k = 0; k < 4; ++k) {
    p.bmd[k] = std::clamp(c + kVertebraOffset[k] + kVertebraSpread * gauss(rng), spec.bmd_min, spec.bmd_max);
  }
  double mean = 0.0;
  for (double& e : p.nuisance) {
    e = gauss(rng);
    mean += e;
  }
  mean /= kLocalRoiCount;
  for (double& e : p.nuisance) e -= mean;
  return p;
}

std::array<double, kLocalRoiCount> texture_amplitudes(const PhantomSpec& spec, const PatientLatent& patient) {
  const double s = (mean_bmd(patient.bmd) - spec.bmd_min) / (spec.bmd_max - spec.bmd_min);
  std::array<double, kLocalRoiCount> amp{};
  for (int i = 0; i < kLocalRoiCount; ++i) {
    const double v = spec.signal_split[i] * s + spec.noise_level * patient.nuisance[i];
    amp[i] = std::max(0.0, spec.base_amplitude + spec.amplitude_gain * v);
  }
  return amp;
}

PhantomSample render_phantom(const PhantomSpec& spec, const PatientLatent& patient, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Pose pose;
  pose.scale = 1.0 + kPoseScalePerJitter * spec.landmark_jitter * (2.0 * unit(rng) - 1.0);
  pose.shift = {kPoseShiftPerJitter * spec.landmark_jitter * (2.0 * unit(rng) - 1.0),
                kPoseShiftPerJitter * spec.landmark_jitter * (2.0 * unit(rng) - 1.0)};

  PhantomSample out;
  out.gt = patient.bmd;
  out.landmarks.image_width = spec.image_size;
  out.landmarks.image_height = spec.image_size;
  for (int i = 0; i < kLandmarkCount; ++i) {
    Point2 p = pose.apply(kLayout[i]);
    p.x = std::clamp(p.x + spec.landmark_jitter * gauss(rng), 0.005, 0.995);
    p.y = std::clamp(p.y + spec.landmark_jitter * gauss(rng), 0.005, 0.995);
    out.landmarks.points[i] = p;
  }
  const auto& lm = out.landmarks;

  Canvas canvas(spec.image_size);
  const Point2 body_c = pose.apply({0.5, 0.52});
  const Point2 lung_l = pose.apply({0.3, 0.5});
  const Point2 lung_r = pose.apply({0.7, 0.5});
  const double sc = pose.scale;
  canvas.visit(0.0, 1.0, 0.0, 1.0, [&](int x, int y, Point2 p) {
    const double body = 1.0 - smoothstep(0.97, 1.03, ellipse_radius(p, body_c, 0.49 * sc, 0.56 * sc));
    const double lung = 1.0 - smoothstep(0.95, 1.05,
                                         std::min(ellipse_radius(p, lung_l, 0.16 * sc, 0.27 * sc),
                                                  ellipse_radius(p, lung_r, 0.16 * sc, 0.27 * sc)));
    canvas.at(x, y) = 0.05 + 0.27 * body - 0.12 * lung;
  });

  // Spine, clavicles and ribs as smooth bright ridges.
  const Point2 cerv = lm[Landmark::Cerv1];
  const Point2 t12 = lm[Landmark::T12_1];
  canvas.ridge({cerv.x, 0.0}, cerv, 0.03, 0.25);
  canvas.ridge(cerv, t12, 0.03, 0.25);
  canvas.ridge(t12, {t12.x, 1.0}, 0.03, 0.25);
  for (int side = 0; side < 2; ++side) {
    const int clav = side == 0 ? static_cast<int>(Landmark::ClavL1) : static_cast<int>(Landmark::ClavR1);
    const int rib = side == 0 ? static_cast<int>(Landmark::RibL1) : static_cast<int>(Landmark::RibR1);
    canvas.ridge(lm.points[clav], lm.points[clav + 1], 0.012, 0.3);
    canvas.ridge(lm.points[clav + 1], lm.points[clav + 2], 0.012, 0.3);
    const double toward = side == 0 ? 1.0 : -1.0;
    for (int j = 0; j < 4; ++j) {
      const Point2 r = lm.points[rib + j];
      const Point2 spine_end{0.5 * (cerv.x + t12.x) - toward * 0.04, r.y - 0.05};
      canvas.ridge(r, spine_end, 0.008, 0.12);
    }
  }

  // ROI gratings.
  out.amplitudes = texture_amplitudes(spec, patient);
  std::vector<BoxFrame> frames;
  for (int i = 0; i < kLocalRoiCount; ++i) {
    const BoxFrame frame(build_roi_geometry(lm, kLocalRois[i], spec.geometry));
    frames.push_back(frame);
    const double amp = out.amplitudes[i];
    const double k = spec.texture_cycles;
    const auto corners = frame.box.corners();
    double x0 = 1.0, x1 = 0.0, y0 = 1.0, y1 = 0.0;
    for (const auto& c : corners) {
      x0 = std::min(x0, c.x);
      x1 = std::max(x1, c.x);
      y0 = std::min(y0, c.y);
      y1 = std::max(y1, c.y);
    }
    const double pad = kTextureMargin * std::max(frame.box.width, frame.box.height);
    canvas.visit(x0 - pad, x1 + pad, y0 - pad, y1 + pad, [&](int x, int y, Point2 p) {
      const Point2 q = frame.local(p);
      if (std::abs(q.x) > 0.5 + kTextureMargin || std::abs(q.y) > 0.5 + kTextureMargin) return;
      canvas.at(x, y) += amp * std::sin(kTwoPi * k * q.x) * std::sin(kTwoPi * k * q.y);
    });
  }

  // Lung-field grating unrelated to BMD, kept clear of the ROI boxes.
  const double distractor = spec.distractor_max * unit(rng);
  const double theta = std::numbers::pi * unit(rng);
  const double fx = std::cos(theta) / kDistractorPeriod, fy = std::sin(theta) / kDistractorPeriod;
  const double phase = unit(rng);
  if (distractor > 0.0) {
    canvas.visit(0.0, 1.0, 0.0, 1.0, [&](int x, int y, Point2 p) {
      const double r = std::min(ellipse_radius(p, lung_l, 0.16 * sc, 0.27 * sc),
                                ellipse_radius(p, lung_r, 0.16 * sc, 0.27 * sc));
      if (r >= 0.95) return;
      for (const auto& f : frames) {
        if (f.contains(p, kDistractorClearance)) return;
      }
      canvas.at(x, y) += distractor * std::sin(kTwoPi * (fx * p.x + fy * p.y + phase));
    });
  }

  if (spec.pixel_noise > 0.0) {
    canvas.visit(0.0, 1.0, 0.0, 1.0,
                 [&](int x, int y, Point2) { canvas.at(x, y) += spec.pixel_noise * gauss(rng); });
  }
  out.image = canvas.to_image();
  return out;
}

PhantomSample generate_phantom(const PhantomSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  const PatientLatent patient = draw_patient(spec, rng);
  PhantomSample s = render_phantom(spec, patient, rng);
  s.patient_id = "P" + std::to_string(rng() % 1000000);
  return s;
}

double texture_statistic(const Image& crop) {
  if (crop.width < 3 || crop.height < 3) {
    throw Error(ErrorCode::EmptyImage, "synthetic_phantom", "texture_statistic", "crop smaller than 3x3");
  }
  double total = 0.0;
  for (int y = 1; y + 1 < crop.height; ++y) {
    for (int x = 1; x + 1 < crop.width; ++x) {
      double box = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) box += crop.at(x + dx, y + dy);
      total += std::abs(crop.at(x, y) - box / 9.0);
    }
  }
  return total / (static_cast<double>(crop.width - 2) * (crop.height - 2));
}

PhantomPlan plan_patients(const PhantomSpec& spec) {
  PhantomPlan plan;
  const int n = spec.n_samples;
  if (n == 0) return plan;
  int patients = static_cast<int>(std::lround(n / (1.0 + spec.repeat_fraction)));
  patients = std::clamp(patients, (n + 1) / 2, n);
  const int repeats = n - patients;

  std::vector<int> order(patients);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(spec.seed, 0x9a7e));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> twice(patients, 0);
  for (int i = 0; i < repeats; ++i) twice[order[i]] = 1;

  char buf[16];
  for (int p = 0; p < patients; ++p) {
    std::snprintf(buf, sizeof buf, "P%05d", p + 1);
    for (int k = 0; k < (twice[p] ? 2 : 1); ++k) {
      plan.patient_ids.emplace_back(buf);
      plan.patient_index.push_back(static_cast<std::size_t>(p));
    }
  }
  return plan;
}

namespace {

PhantomSample sample_at(const PhantomSpec& spec, const PhantomPlan& plan, std::size_t i) {
  std::mt19937_64 patient_rng(mix_seed(mix_seed(spec.seed, 1), plan.patient_index[i]));
  const PatientLatent patient = draw_patient(spec, patient_rng);
  std::mt19937_64 scan_rng(mix_seed(mix_seed(spec.seed, 2), i));
  PhantomSample s = render_phantom(spec, patient, scan_rng);
  s.patient_id = plan.patient_ids[i];
  return s;
}

std::string scan_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%05zu", i + 1);
  return buf;
}

}  // namespace

std::vector<PhantomSample> generate_samples(const PhantomSpec& spec) {
  spec.validate();
  const PhantomPlan plan = plan_patients(spec);
  std::vector<PhantomSample> out(plan.patient_ids.size());
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = sample_at(spec, plan, static_cast<std::size_t>(i));
  return out;
}

DatasetManifest generate_dataset(const PhantomSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  fs::create_directories(out_dir / "landmarks", ec);
  if (ec) throw Error(ErrorCode::IoError, "synthetic_phantom", "generate_dataset", out_dir.string() + ": " + ec.message());

  const PhantomPlan plan = plan_patients(spec);
  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.rows.resize(plan.patient_ids.size());
  const auto n = static_cast<std::ptrdiff_t>(manifest.rows.size());
  std::vector<std::string> failures(manifest.rows.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const PhantomSample s = sample_at(spec, plan, static_cast<std::size_t>(i));
      ManifestRow& row = manifest.rows[i];
      row.scan_id = scan_name(static_cast<std::size_t>(i));
      row.patient_id = s.patient_id;
      row.image_path = "images/" + row.scan_id + ".png";
      row.landmark_path = "landmarks/" + row.scan_id + ".txt";
      for (int k = 0; k < 4; ++k) row.gt[k] = s.gt[k];
      write_png(out_dir / row.image_path, s.image);
      save_landmark_file((out_dir / row.landmark_path).string(), s.landmarks);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw Error(ErrorCode::IoError, "synthetic_phantom", "generate_dataset", f);
  }
  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace multiroi
