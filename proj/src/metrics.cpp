#include "multiroi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "json.hpp"
#include "multiroi/errors.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

double pearson_r(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size() || pred.size() < 2) {
    throw Error(ErrorCode::LengthMismatch, "metrics_eval", "pearson_r",
                std::to_string(pred.size()) + " vs " + std::to_string(gt.size()));
  }
  const double n = static_cast<double>(pred.size());
  const double mx = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  const double my = std::accumulate(gt.begin(), gt.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i] - mx;
    const double dy = gt[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ConstantSequence, "metrics_eval", "pearson_r", "");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---- T-scores --------------------------------------------------------------

TScoreTable::TScoreTable(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw Error(ErrorCode::InvalidTable, "metrics_eval", "bmd_to_tscore", "need >= 2 knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].bmd) || !std::isfinite(knots_[i].t_score)) {
      throw Error(ErrorCode::InvalidTable, "metrics_eval", "bmd_to_tscore", "non-finite knot");
    }
    if (i > 0 && !(knots_[i].bmd > knots_[i - 1].bmd && knots_[i].t_score > knots_[i - 1].t_score)) {
      throw Error(ErrorCode::InvalidTable, "metrics_eval", "bmd_to_tscore",
                  "knots must be strictly increasing (knot " + std::to_string(i) + ")");
    }
  }
}

TScoreTable TScoreTable::default_table() { return TScoreTable({{0.7, -2.5}, {1.0, 0.0}}); }

TScoreTable TScoreTable::parse(std::string_view contents) {
  std::vector<Knot> knots;
  for (std::string_view line : text::split(contents, '\n')) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto parts = text::tokens(text::trim(line));
    if (parts.empty()) continue;
    const auto b = parts.size() == 2 ? text::parse_double(parts[0]) : std::nullopt;
    const auto t = parts.size() == 2 ? text::parse_double(parts[1]) : std::nullopt;
    if (!b || !t) throw Error(ErrorCode::InvalidTable, "metrics_eval", "load_table", "bad line: " + std::string(line));
    knots.push_back({*b, *t});
  }
  return TScoreTable(std::move(knots));
}

TScoreTable TScoreTable::load(const std::string& path) { return parse(text::read_file(path)); }

double TScoreTable::operator()(double bmd) const {
  // Segment whose interval contains bmd; the end segments extrapolate.
  std::size_t i = 1;
  while (i + 1 < knots_.size() && bmd > knots_[i].bmd) ++i;
  const Knot& a = knots_[i - 1];
  const Knot& b = knots_[i];
  if (bmd == a.bmd) return a.t_score;
  if (bmd == b.bmd) return b.t_score;
  return a.t_score + (bmd - a.bmd) * (b.t_score - a.t_score) / (b.bmd - a.bmd);
}

double bmd_to_tscore(double bmd, const TScoreTable& table) { return table(bmd); }

std::vector<int> osteo_labels(std::span<const double> gt_bmd, const TScoreTable& table) {
  std::vector<int> labels(gt_bmd.size());
  for (std::size_t i = 0; i < gt_bmd.size(); ++i) labels[i] = table(gt_bmd[i]) <= kOsteoporosisThreshold ? 1 : 0;
  return labels;
}

// ---- AUC -------------------------------------------------------------------

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "metrics_eval", "auc",
                std::to_string(scores.size()) + " vs " + std::to_string(labels.size()));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorCode::SingleClass, "metrics_eval", "auc", "");
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

// ---- evaluation --------------------------------------------------------------

EvalReport evaluate(const PredictionTable& predictions, const DatasetManifest& gt, const TScoreTable& table) {
  std::unordered_map<std::string, const ManifestRow*> by_id;
  for (const auto& row : gt.rows) by_id.emplace(row.scan_id, &row);

  EvalReport report;
  report.n_test = static_cast<int>(predictions.rows.size());
  std::array<std::vector<double>, 4> pred, truth;
  for (const auto& p : predictions.rows) {
    const auto it = by_id.find(p.scan_id);
    if (it == by_id.end()) throw Error(ErrorCode::JoinFailure, "metrics_eval", "evaluate", p.scan_id);
    for (int v = 0; v < 4; ++v) {
      if (!it->second->gt[v]) continue;
      pred[v].push_back(p.bmd[v]);
      truth[v].push_back(*it->second->gt[v]);
      report.scatter.push_back({v, *it->second->gt[v], p.bmd[v]});
    }
  }
  for (int v = 0; v < 4; ++v) {
    const std::string tag = "L" + std::to_string(v + 1);
    try {
      report.r[v] = pearson_r(pred[v], truth[v]);
      const auto labels = osteo_labels(truth[v], table);
      std::vector<double> scores(pred[v].size());
      for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = -table(pred[v][i]);
      report.auc[v] = auc(scores, labels);
      report.n_used[v] = static_cast<int>(labels.size());
      report.n_positive[v] = static_cast<int>(std::count(labels.begin(), labels.end(), 1));
    } catch (const Error& e) {
      throw e.with_context(tag);
    }
  }
  report.mean_r = (report.r[0] + report.r[1] + report.r[2] + report.r[3]) / 4.0;
  report.mean_auc = (report.auc[0] + report.auc[1] + report.auc[2] + report.auc[3]) / 4.0;
  return report;
}

std::string format_report_table(const EvalReport& report, const std::string& label) {
  std::string out = "| Modality         | L1 R  | L1 AUC | L2 R  | L2 AUC | L3 R  | L3 AUC | L4 R  | L4 AUC | Avg R | Avg AUC |\n";
  out += "|------------------|-------|--------|-------|--------|-------|--------|-------|--------|-------|---------|\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "| %-16s |", label.c_str());
  out += buf;
  for (int v = 0; v < 4; ++v) {
    std::snprintf(buf, sizeof buf, " %.3f | %.3f  |", report.r[v], report.auc[v]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, " %.3f | %.3f   |\n", report.mean_r, report.mean_auc);
  out += buf;
  return out;
}

std::string format_report_json(const EvalReport& report) {
  nlohmann::json j;
  const char* names[4] = {"L1", "L2", "L3", "L4"};
  for (int v = 0; v < 4; ++v) {
    j["per_vertebra"][names[v]] = {{"r_value", report.r[v]},
                                   {"auc", report.auc[v]},
                                   {"n", report.n_used[v]},
                                   {"n_positive", report.n_positive[v]}};
  }
  j["average"] = {{"r_value", report.mean_r}, {"auc", report.mean_auc}};
  j["n_test"] = report.n_test;
  j["threshold"] = report.threshold;
  return j.dump(2) + "\n";
}

std::string format_scatter_csv(const EvalReport& report) {
  std::string out = "vertebra,gt_bmd,pred_bmd\n";
  for (const auto& p : report.scatter) {
    out += "L" + std::to_string(p.vertebra + 1) + "," + text::format_double(p.gt) + "," +
           text::format_double(p.pred) + "\n";
  }
  return out;
}

std::vector<ScatterPoint> parse_scatter_csv(std::string_view contents) {
  std::vector<ScatterPoint> points;
  const auto lines = text::split(contents, '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty()) continue;
    const auto cells = text::split(line, ',');
    const auto gt = cells.size() == 3 ? text::parse_double(cells[1]) : std::nullopt;
    const auto pred = cells.size() == 3 ? text::parse_double(cells[2]) : std::nullopt;
    if (!gt || !pred || cells[0].size() != 2 || cells[0][0] != 'L' || cells[0][1] < '1' || cells[0][1] > '4') {
      throw Error(ErrorCode::MalformedManifest, "metrics_eval", "parse_scatter_csv", "line " + std::to_string(i + 1));
    }
    points.push_back({cells[0][1] - '1', *gt, *pred});
  }
  return points;
}

}  // namespace multiroi
