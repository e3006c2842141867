#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "multiroi/manifest.hpp"
#include "multiroi/predictions.hpp"

namespace multiroi {

/// Product-moment correlation. Throws LengthMismatch (also for n < 2) / ConstantSequence.
double pearson_r(std::span<const double> pred, std::span<const double> gt);

/// Piecewise-linear BMD -> T-score map with linear extrapolation past the end knots.
class TScoreTable {
 public:
  struct Knot {
    double bmd;
    double t_score;
  };

  /// Throws InvalidTable unless both columns are strictly increasing (>= 2 knots).
  explicit TScoreTable(std::vector<Knot> knots);

  /// Synthetic default {(0.7, -2.5), (1.0, 0.0)}.
  static TScoreTable default_table();
  /// Text file: one `bmd t_score` pair per line, `#` comments.
  static TScoreTable load(const std::string& path);
  static TScoreTable parse(std::string_view text);

  double operator()(double bmd) const;
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  std::vector<Knot> knots_;
};

inline constexpr double kOsteoporosisThreshold = -2.5;

double bmd_to_tscore(double bmd, const TScoreTable& table);
/// 1 when the T-score is at or below -2.5.
std::vector<int> osteo_labels(std::span<const double> gt_bmd, const TScoreTable& table);

/// Mann-Whitney AUC: P(score of a positive > score of a negative), ties count 1/2.
/// Rank-based, O(n log n). Throws LengthMismatch / SingleClass.
double auc(std::span<const double> scores, std::span<const int> labels);

struct ScatterPoint {
  int vertebra = 0;  // 0..3 for L1..L4
  double gt = 0.0;
  double pred = 0.0;
};

struct EvalReport {
  std::array<double, 4> r{};
  std::array<double, 4> auc{};
  double mean_r = 0.0;
  double mean_auc = 0.0;
  int n_test = 0;
  std::array<int, 4> n_used{};
  std::array<int, 4> n_positive{};
  double threshold = kOsteoporosisThreshold;
  std::vector<ScatterPoint> scatter;
};

/// Joins predictions to ground truth by scan_id (JoinFailure when a scan has no row).
/// AUC scores are negated predicted T-scores, so lower predicted BMD ranks as more osteoporotic.
/// Rows missing a vertebra's ground truth are left out of that vertebra only.
EvalReport evaluate(const PredictionTable& predictions, const DatasetManifest& gt, const TScoreTable& table);

/// Table layout: one row, R-value and AUC per vertebra plus the average.
std::string format_report_table(const EvalReport& report, const std::string& label);
std::string format_report_json(const EvalReport& report);
std::string format_scatter_csv(const EvalReport& report);
std::vector<ScatterPoint> parse_scatter_csv(std::string_view text);

}  // namespace multiroi
