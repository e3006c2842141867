#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "multiroi/image.hpp"
#include "multiroi/landmarks.hpp"
#include "multiroi/manifest.hpp"
#include "multiroi/metrics.hpp"
#include "multiroi/model.hpp"
#include "multiroi/roi.hpp"

namespace multiroi {

inline constexpr int kLocalRoiCount = 6;
/// The six local ROIs, in the order used by PhantomSpec::signal_split.
inline constexpr std::array<RoiKind, kLocalRoiCount> kLocalRois = {
    RoiKind::ClavicleL, RoiKind::ClavicleR, RoiKind::Cervical, RoiKind::RibcageL, RoiKind::RibcageR, RoiKind::T12};

/// Radiograph-like phantom. Each local ROI carries a grating aligned with its box;
/// the grating amplitude is
///   base_amplitude + amplitude_gain * (signal_split[i] * s + noise_level * d_i),
/// where s = (mean BMD - bmd_min) / (bmd_max - bmd_min) and d is a per-patient
/// standard-normal vector with its mean removed (so the d_i cancel across the six ROIs).
/// Lung fields carry a grating of random amplitude unrelated to BMD.
struct PhantomSpec {
  int image_size = 512;
  int n_samples = 2000;
  std::uint64_t seed = 7;
  std::array<double, kLocalRoiCount> signal_split{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
  double noise_level = 0.07;
  double bmd_min = 0.6;
  double bmd_max = 1.4;
  TScoreTable t_table = TScoreTable::default_table();

  double base_amplitude = 0.03;
  double amplitude_gain = 0.3;
  /// Grating cycles across each ROI box, along both box axes.
  double texture_cycles = 12.0;
  double distractor_max = 0.12;
  double pixel_noise = 0.0;
  /// Per-landmark jitter std; the whole-body pose variation is proportional to it.
  double landmark_jitter = 0.006;
  /// Fraction of patients contributing a second scan.
  double repeat_fraction = 0.1;
  GeometryConfig geometry;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Per-patient latent state shared by all of that patient's scans.
struct PatientLatent {
  BmdVector bmd{};
  std::array<double, kLocalRoiCount> nuisance{};
};

struct PhantomSample {
  /// Float intensities in [0, 1]; generate_dataset quantizes to 8 bits when writing.
  Image image;
  LandmarkSet landmarks;
  BmdVector gt{};
  std::string patient_id;
  /// Rendered grating amplitude per local ROI (kLocalRois order).
  std::array<double, kLocalRoiCount> amplitudes{};
};

PatientLatent draw_patient(const PhantomSpec& spec, std::mt19937_64& rng);
PhantomSample render_phantom(const PhantomSpec& spec, const PatientLatent& patient, std::mt19937_64& rng);
PhantomSample generate_phantom(const PhantomSpec& spec, std::mt19937_64& rng);

double mean_bmd(const BmdVector& bmd);
std::array<double, kLocalRoiCount> texture_amplitudes(const PhantomSpec& spec, const PatientLatent& patient);

/// Mean absolute response of a 3x3 box high-pass over the crop interior.
double texture_statistic(const Image& crop);

struct PhantomPlan {
  std::vector<std::string> patient_ids;  // per scan
  std::vector<std::size_t> patient_index;
};

/// Patient assignment for n_samples scans (about repeat_fraction of patients have two).
PhantomPlan plan_patients(const PhantomSpec& spec);

/// In-memory generation; sample i is reproducible independently of the others.
std::vector<PhantomSample> generate_samples(const PhantomSpec& spec);

/// Writes images/<scan>.png, landmarks/<scan>.txt and manifest.csv under out_dir.
DatasetManifest generate_dataset(const PhantomSpec& spec, const std::filesystem::path& out_dir);

}  // namespace multiroi
