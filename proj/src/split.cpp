#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "multiroi/errors.hpp"
#include "multiroi/manifest.hpp"

namespace multiroi {

DatasetManifest patient_grouped_split(const DatasetManifest& manifest, const SplitRatios& ratios,
                                      std::uint64_t seed) {
  if (manifest.rows.empty()) throw Error(ErrorCode::EmptyManifest, "training_engine", "patient_grouped_split", "");
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidConfig, "training_engine", "patient_grouped_split",
                "ratios must be positive and sum to 1");
  }

  // Patients in first-appearance order, then shuffled.
  std::map<std::string, std::size_t> scan_count;
  std::vector<std::string> patients;
  for (const auto& row : manifest.rows) {
    if (scan_count[row.patient_id]++ == 0) patients.push_back(row.patient_id);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(patients.begin(), patients.end(), rng);

  const double n = static_cast<double>(manifest.rows.size());
  const auto train_target = static_cast<std::size_t>(std::llround(ratios.train * n));
  const auto train_val_target = static_cast<std::size_t>(std::llround((ratios.train + ratios.val) * n));

  std::map<std::string, Split> assignment;
  std::size_t cumulative = 0;
  for (const auto& patient : patients) {
    Split s = Split::Test;
    if (cumulative < train_target) {
      s = Split::Train;
    } else if (cumulative < train_val_target) {
      s = Split::Val;
    }
    assignment[patient] = s;
    cumulative += scan_count[patient];
  }

  DatasetManifest out = manifest;
  for (auto& row : out.rows) row.split = assignment[row.patient_id];
  return out;
}

}  // namespace multiroi
