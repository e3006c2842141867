#include "multiroi/ensemble.hpp"

#include <algorithm>
#include <unordered_map>

#include "multiroi/errors.hpp"

namespace multiroi {

namespace {

// Sorted summation makes the result independent of member order; the clamp keeps
// rounding from pushing the mean outside the member range.
double cell_mean(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  if (values.front() == values.back()) return values.front();
  double acc = 0.0;
  for (double v : values) acc += v;
  return std::clamp(acc / static_cast<double>(values.size()), values.front(), values.back());
}

}  // namespace

PredictionTable ensemble_mean(std::span<const PredictionTable> members) {
  if (members.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble", "ensemble_mean", "");

  std::vector<std::unordered_map<std::string, const PredictionRow*>> index(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    for (const auto& row : members[m].rows) {
      if (!index[m].emplace(row.scan_id, &row).second) {
        throw Error(ErrorCode::ScanSetMismatch, "ensemble", "ensemble_mean", "duplicate scan " + row.scan_id);
      }
    }
    if (index[m].size() != index[0].size()) {
      throw Error(ErrorCode::ScanSetMismatch, "ensemble", "ensemble_mean",
                  "member " + std::to_string(m) + " has " + std::to_string(index[m].size()) + " scans, expected " +
                      std::to_string(index[0].size()));
    }
  }

  PredictionTable out;
  out.rows.reserve(members[0].rows.size());
  std::vector<double> values(members.size());
  for (const auto& first : members[0].rows) {
    std::vector<const PredictionRow*> cells(members.size());
    for (std::size_t m = 0; m < members.size(); ++m) {
      const auto it = index[m].find(first.scan_id);
      if (it == index[m].end()) {
        throw Error(ErrorCode::ScanSetMismatch, "ensemble", "ensemble_mean",
                    "scan " + first.scan_id + " missing from member " + std::to_string(m));
      }
      cells[m] = it->second;
    }
    PredictionRow row{first.scan_id, first.patient_id, {}};
    for (int v = 0; v < 4; ++v) {
      for (std::size_t m = 0; m < members.size(); ++m) values[m] = cells[m]->bmd[v];
      row.bmd[v] = cell_mean(values);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

PredictionTable ensemble(EnsembleScheme scheme, std::span<const PredictionTable> members) {
  if (members.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble", "ensemble", "");
  if (static_cast<int>(members.size()) != ensemble_size(scheme)) {
    throw Error(ErrorCode::InvalidConfig, "ensemble", "ensemble",
                std::string(scheme == EnsembleScheme::RoiOnly ? "ROI_ONLY" : "ALL") + " expects " +
                    std::to_string(ensemble_size(scheme)) + " members, got " + std::to_string(members.size()));
  }
  return ensemble_mean(members);
}

}  // namespace multiroi
