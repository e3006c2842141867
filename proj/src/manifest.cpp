#include "multiroi/manifest.hpp"

#include <cmath>
#include <unordered_set>

#include "multiroi/errors.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace {
constexpr std::array<std::string_view, 4> kSplitNames = {"train", "val", "test", "unset"};

[[noreturn]] void malformed(int line, const std::string& why) {
  throw Error(ErrorCode::MalformedManifest, "cli_config_io", "load_manifest",
              "line " + std::to_string(line) + ": " + why);
}
}  // namespace

std::string_view split_name(Split split) { return kSplitNames[static_cast<int>(split)]; }

std::optional<Split> split_from_name(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kSplitNames[i] == name) return static_cast<Split>(i);
  }
  return std::nullopt;
}

bool ManifestRow::has_all_gt() const {
  for (const auto& v : gt) {
    if (!v) return false;
  }
  return true;
}

std::filesystem::path DatasetManifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::vector<const ManifestRow*> DatasetManifest::rows_in(Split split) const {
  std::vector<const ManifestRow*> out;
  for (const auto& row : rows) {
    if (row.split == split) out.push_back(&row);
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir, bool check_paths) {
  DatasetManifest manifest;
  manifest.base_dir = base_dir;
  const auto lines = text::split(text, '\n');
  if (lines.empty() || text::trim(lines[0]) != kManifestHeader) malformed(1, "header must be " + std::string(kManifestHeader));

  std::unordered_set<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i + 1);
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (i + 1 == lines.size()) break;  // trailing newline
      malformed(line_no, "empty line");
    }
    const auto cells = text::split(line, ',');
    if (cells.size() != 9) malformed(line_no, "expected 9 fields, got " + std::to_string(cells.size()));

    ManifestRow row;
    row.scan_id = std::string(cells[0]);
    row.patient_id = std::string(cells[1]);
    row.image_path = std::string(cells[2]);
    row.landmark_path = std::string(cells[3]);
    if (row.scan_id.empty() || row.patient_id.empty()) malformed(line_no, "empty scan_id or patient_id");
    if (!ids.insert(row.scan_id).second) malformed(line_no, "duplicate scan_id " + row.scan_id);
    for (int v = 0; v < 4; ++v) {
      if (cells[4 + v].empty()) continue;
      const auto value = text::parse_double(cells[4 + v]);
      if (!value || !std::isfinite(*value) || *value <= 0.0 || *value >= 3.0) {
        malformed(line_no, "gt_L" + std::to_string(v + 1) + " must be a number in (0, 3)");
      }
      row.gt[v] = *value;
    }
    const auto split = split_from_name(cells[8]);
    if (!split) malformed(line_no, "unknown split '" + std::string(cells[8]) + "'");
    row.split = *split;

    if (check_paths) {
      for (const auto* p : {&row.image_path, &row.landmark_path}) {
        if (!std::filesystem::exists(manifest.resolve(*p))) malformed(line_no, "missing file " + *p);
      }
    }
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& row : manifest.rows) {
    out += row.scan_id + ',' + row.patient_id + ',' + row.image_path + ',' + row.landmark_path;
    for (const auto& v : row.gt) {
      out += ',';
      if (v) out += text::format_double(*v);
    }
    out += ',';
    out += split_name(row.split);
    out += '\n';
  }
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path, bool lazy) {
  return parse_manifest(text::read_file(path.string()), path.parent_path(), !lazy);
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  text::write_file(path.string(), format_manifest(manifest));
}

}  // namespace multiroi

// ---- prediction tables ------------------------------------------------------

#include "multiroi/predictions.hpp"

namespace multiroi {

std::string format_predictions(const PredictionTable& table) {
  std::string out(kPredictionHeader);
  out += '\n';
  for (const auto& row : table.rows) {
    out += row.scan_id + ',' + row.patient_id;
    for (double v : row.bmd) out += ',' + text::format_double(v);
    out += '\n';
  }
  return out;
}

PredictionTable parse_predictions(std::string_view text) {
  auto bad = [](int line, const std::string& why) {
    throw Error(ErrorCode::MalformedManifest, "training_engine", "load_predictions",
                "line " + std::to_string(line) + ": " + why);
  };
  const auto lines = text::split(text, '\n');
  if (lines.empty() || text::trim(lines[0]) != kPredictionHeader) bad(1, "bad header");
  PredictionTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = text::trim(lines[i]);
    if (line.empty()) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != 6) bad(static_cast<int>(i + 1), "expected 6 fields");
    PredictionRow row{std::string(cells[0]), std::string(cells[1]), {}};
    for (int v = 0; v < 4; ++v) {
      const auto value = text::parse_double(cells[2 + v]);
      if (!value) bad(static_cast<int>(i + 1), "non-numeric prediction");
      row.bmd[v] = *value;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

PredictionTable load_predictions(const std::filesystem::path& path) {
  try {
    return parse_predictions(text::read_file(path.string()));
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

void save_predictions(const PredictionTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  text::write_file(path.string(), format_predictions(table));
}

}  // namespace multiroi
