#include "multiroi/pipeline.hpp"

#include <chrono>
#include <iostream>

#include "json.hpp"
#include "multiroi/checkpoint.hpp"
#include "multiroi/ensemble.hpp"
#include "multiroi/errors.hpp"
#include "multiroi/phantom.hpp"
#include "multiroi/plot.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string phantom_stamp(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : config.entries()) {
    if (k.rfind("phantom.", 0) == 0 || k == "seed") out += k + " = " + v + "\n";
  }
  return out;
}

DatasetManifest synth_or_reuse(const RunConfig& config, const fs::path& data_dir, bool reuse) {
  const fs::path stamp = data_dir / "phantom.txt";
  const std::string expected = phantom_stamp(config);
  std::error_code ec;
  if (reuse && fs::exists(stamp, ec) && fs::exists(data_dir / "manifest.csv", ec)) {
    try {
      if (text::read_file(stamp) == expected) return load_manifest(data_dir / "manifest.csv");
    } catch (const Error&) {
      // regenerate below
    }
  }
  PhantomSpec spec = config.phantom;
  spec.seed = config.seed;
  DatasetManifest manifest = generate_dataset(spec, data_dir);
  text::write_file(stamp, expected);
  return manifest;
}

void write_report_files(const EvalReport& report, const std::string& label, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  text::write_file(dir / "report.md", format_report_table(report, label));
  text::write_file(dir / "report.json", format_report_json(report));
  text::write_file(dir / "scatter.csv", format_scatter_csv(report));
}

}  // namespace

RunConfig repro_defaults() {
  RunConfig c;
  c.seed = 7;
  c.model = "multi";
  c.encoder = "tiny";
  c.geometry.out_height = 64;
  c.geometry.out_width = 64;
  c.train.epochs = 20;
  c.train.batch_size = 32;
  c.train.learning_rate = 0.1;
  c.train.momentum = 0.9;
  c.train.augment_enabled = false;
  c.phantom.n_samples = 2000;
  c.output_dir = "runs/repro";
  return c;
}

TScoreTable load_tscore_table(const RunConfig& config) {
  return config.tscore_table.empty() ? TScoreTable::default_table() : TScoreTable::load(config.tscore_table);
}

TrainResult train_run(const RunConfig& config, const DatasetManifest& manifest, const fs::path& out_dir,
                      const CropStore* store) {
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  tc.validate();
  write_run_stamp(config, out_dir);
  RoiModel model(model_spec_from_name(config.model, config.encoder), config.seed);
  model.set_output_bias(mean_target(manifest, Split::Train));
  return train(manifest, model, tc, config.geometry, out_dir, store);
}

const ModelOutcome* ReproResult::best_baseline() const {
  const ModelOutcome* best = nullptr;
  for (const auto& b : baselines) {
    if (best == nullptr || b.report.mean_r > best->report.mean_r) best = &b;
  }
  return best;
}

ReproResult run_repro_synthetic(const ReproOptions& options) {
  const RunConfig& config = options.config;
  const auto t_start = std::chrono::steady_clock::now();
  auto say = [&](const std::string& msg) {
    if (!options.quiet) std::cerr << "[repro] " << msg << std::endl;
  };

  ReproResult result;
  result.out_dir = config.output_dir;
  write_run_stamp(config, result.out_dir);
  const TScoreTable table = load_tscore_table(config);

  auto t0 = std::chrono::steady_clock::now();
  DatasetManifest manifest = synth_or_reuse(config, result.out_dir / "data", options.reuse_data);
  result.synth_seconds = seconds_since(t0);
  result.n_scans = manifest.rows.size();
  say("phantoms ready: " + std::to_string(result.n_scans) + " scans");

  manifest = patient_grouped_split(manifest, SplitRatios{}, config.seed);
  manifest.base_dir = result.out_dir / "data";
  save_manifest(manifest, manifest.base_dir / "manifest_split.csv");
  result.split_sizes = {manifest.rows_in(Split::Train).size(), manifest.rows_in(Split::Val).size(),
                        manifest.rows_in(Split::Test).size()};

  t0 = std::chrono::steady_clock::now();
  std::vector<const ManifestRow*> rows;
  for (const auto& r : manifest.rows) rows.push_back(&r);
  const CropStore store =
      CropStore::load(manifest, rows, config.geometry, std::span(kAllRois.data(), kAllRois.size()), config.train.workers);
  result.crop_seconds = seconds_since(t0);
  say("crops extracted in " + text::format_double(std::round(result.crop_seconds * 10) / 10) + " s");

  auto run_model = [&](const std::string& name) {
    const auto t = std::chrono::steady_clock::now();
    RunConfig c = config;
    c.model = name;
    const fs::path dir = result.out_dir / "models" / name;
    ModelOutcome out;
    out.name = name;
    out.training = train_run(c, manifest, dir, &store);
    out.predictions = predict_checkpoint(out.training.best_checkpoint, manifest, Split::Test, config.geometry, true, &store);
    save_predictions(out.predictions, result.out_dir / "predictions" / (name + ".csv"));
    out.report = evaluate(out.predictions, manifest, table);
    write_report_files(out.report, name, dir);
    out.seconds = seconds_since(t);
    say(name + ": mean r " + text::format_double(out.report.mean_r) + ", mean auc " +
        text::format_double(out.report.mean_auc) + " (" + std::to_string(static_cast<int>(out.seconds)) + " s)");
    return out;
  };

  result.multi = run_model("multi");
  if (options.baselines) {
    for (const auto& name : baseline_names()) result.baselines.push_back(run_model(name));
    std::vector<PredictionTable> members;
    for (const auto& b : result.baselines) members.push_back(b.predictions);
    const PredictionTable roi = ensemble(EnsembleScheme::RoiOnly, members);
    members.push_back(result.multi.predictions);
    const PredictionTable all = ensemble(EnsembleScheme::All, members);
    save_predictions(roi, result.out_dir / "predictions" / "ensemble_roi.csv");
    save_predictions(all, result.out_dir / "predictions" / "ensemble_all.csv");
    result.ensemble_roi = evaluate(roi, manifest, table);
    result.ensemble_all = evaluate(all, manifest, table);
  }

  write_scatter_plots(result.multi.report.scatter, result.out_dir / "plots");
  result.total_seconds = seconds_since(t_start);
  text::write_file(result.out_dir / "report.md", format_repro_report(result));

  nlohmann::ordered_json j;
  j["n_scans"] = result.n_scans;
  j["split_sizes"] = result.split_sizes;
  j["multi"] = nlohmann::json::parse(format_report_json(result.multi.report));
  for (const auto& b : result.baselines) j["baselines"][b.name] = nlohmann::json::parse(format_report_json(b.report));
  if (result.ensemble_roi) j["ensemble_roi"] = nlohmann::json::parse(format_report_json(*result.ensemble_roi));
  if (result.ensemble_all) j["ensemble_all"] = nlohmann::json::parse(format_report_json(*result.ensemble_all));
  j["seconds"] = {{"synth", result.synth_seconds},
                  {"crops", result.crop_seconds},
                  {"multi", result.multi.seconds},
                  {"total", result.total_seconds}};
  text::write_file(result.out_dir / "report.json", j.dump(2) + "\n");
  return result;
}

std::string format_repro_report(const ReproResult& result) {
  // Markdown table whose header comes from the first formatted row.
  std::string out = "# Synthetic reproduction\n\n";
  out += "scans: " + std::to_string(result.n_scans) + " (train " + std::to_string(result.split_sizes[0]) + ", val " +
         std::to_string(result.split_sizes[1]) + ", test " + std::to_string(result.split_sizes[2]) + ")\n\n";
  auto add = [&, first = true](const EvalReport& r, const std::string& label) mutable {
    std::string t = format_report_table(r, label);
    if (!first) t = t.substr(t.find('\n', t.find('\n') + 1) + 1);
    out += t;
    first = false;
  };
  for (const auto& b : result.baselines) add(b.report, b.name);
  add(result.multi.report, "multi");
  if (result.ensemble_roi) add(*result.ensemble_roi, "ensemble_roi");
  if (result.ensemble_all) add(*result.ensemble_all, "ensemble_all");
  return out;
}

}  // namespace multiroi
