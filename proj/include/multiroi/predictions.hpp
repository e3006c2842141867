#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace multiroi {

struct PredictionRow {
  std::string scan_id;
  std::string patient_id;
  std::array<double, 4> bmd{};
  friend bool operator==(const PredictionRow&, const PredictionRow&) = default;
};

struct PredictionTable {
  std::vector<PredictionRow> rows;
  friend bool operator==(const PredictionTable&, const PredictionTable&) = default;
};

inline constexpr std::string_view kPredictionHeader = "scan_id,patient_id,pred_L1,pred_L2,pred_L3,pred_L4";

/// Values are written in shortest round-trip form, so parse(format(t)) == t.
std::string format_predictions(const PredictionTable& table);
PredictionTable parse_predictions(std::string_view text);
PredictionTable load_predictions(const std::filesystem::path& path);
void save_predictions(const PredictionTable& table, const std::filesystem::path& path);

}  // namespace multiroi
