#include "multiroi/cli.hpp"

#include <iostream>

#include "CLI11.hpp"
#include "multiroi/ensemble.hpp"
#include "multiroi/errors.hpp"
#include "multiroi/phantom.hpp"
#include "multiroi/pipeline.hpp"
#include "multiroi/plot.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void usage(std::string detail) {
  throw Error(ErrorCode::UsageError, "cli_config_io", "cli", std::move(detail));
}

Split parse_split(const std::string& name) {
  const auto s = split_from_name(name);
  if (!s) usage("unknown split: " + name);
  return *s;
}

// Config file first, then --set overrides, then dedicated flags (applied by the caller).
struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "Flat key = value config file");
    app->add_option("--set", sets, "Override one config key (key=value); repeatable");
  }
  RunConfig resolve(RunConfig base = {}) const {
    RunConfig c = file.empty() ? std::move(base) : load_config(file, std::move(base));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) usage("--set expects key=value, got " + kv);
      c.set(text::trim(std::string_view(kv).substr(0, eq)), std::string_view(kv).substr(eq + 1));
    }
    return c;
  }
};

void print(const std::string& s) { std::cout << s << std::flush; }

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Lumbar BMD estimation from chest radiographs using landmark-anchored ROIs", "multiroi_bmd"};
  app.set_version_flag("--version", std::string(MULTIROI_VERSION));
  app.require_subcommand(1);

  // synth
  ConfigArgs synth_cfg;
  std::string synth_out;
  std::optional<int> synth_n;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a phantom dataset");
  synth_cfg.attach(synth);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", synth_n, "Number of scans");
  synth->add_option("--seed", synth_seed, "Random seed");

  // split
  std::string split_manifest, split_out;
  std::uint64_t split_seed = 0;
  SplitRatios ratios;
  auto* split = app.add_subcommand("split", "Patient-grouped train/val/test split");
  split->add_option("--manifest", split_manifest)->required();
  split->add_option("--out", split_out, "Output manifest path")->required();
  split->add_option("--seed", split_seed);
  split->add_option("--train", ratios.train);
  split->add_option("--val", ratios.val);
  split->add_option("--test", ratios.test);

  // extract-rois
  ConfigArgs extract_cfg;
  std::string extract_manifest, extract_out;
  std::vector<std::string> extract_scans;
  int extract_limit = 5;
  auto* extract = app.add_subcommand("extract-rois", "Write the seven ROI crops of some scans as PNG");
  extract_cfg.attach(extract);
  extract->add_option("--manifest", extract_manifest)->required();
  extract->add_option("--out", extract_out)->required();
  extract->add_option("--scan", extract_scans, "Scan ids (default: the first --limit rows)");
  extract->add_option("--limit", extract_limit);

  // train
  ConfigArgs train_cfg;
  std::string train_manifest, train_out, train_roi, train_encoder;
  bool train_multi = false, train_no_augment = false;
  std::optional<int> train_epochs, train_batch;
  std::optional<double> train_lr;
  std::optional<std::uint64_t> train_seed;
  auto* trn = app.add_subcommand("train", "Train a single-ROI (--roi) or multi-ROI (--multi) model");
  train_cfg.attach(trn);
  trn->add_option("--manifest", train_manifest, "Manifest with split tags")->required();
  trn->add_option("--out", train_out, "Run directory (default: output_dir from config)");
  auto* roi_opt = trn->add_option("--roi", train_roi, "ROI name or baseline (cervi, clavi, lumbar, ribcage, chest)");
  trn->add_flag("--multi", train_multi, "Multi-ROI model")->excludes(roi_opt);
  trn->add_option("--encoder", train_encoder);
  trn->add_option("--epochs", train_epochs);
  trn->add_option("--batch-size", train_batch);
  trn->add_option("--lr", train_lr);
  trn->add_option("--seed", train_seed);
  trn->add_flag("--no-augment", train_no_augment);

  // predict
  ConfigArgs predict_cfg;
  std::string predict_ckpt, predict_manifest, predict_out, predict_split = "test";
  bool predict_lenient = false;
  auto* pred = app.add_subcommand("predict", "Predict L1-L4 BMD from a checkpoint");
  predict_cfg.attach(pred);
  pred->add_option("--checkpoint", predict_ckpt)->required();
  pred->add_option("--manifest", predict_manifest)->required();
  pred->add_option("--split", predict_split, "train, val, test or unset");
  pred->add_option("--out", predict_out, "Prediction CSV")->required();
  pred->add_flag("--lenient", predict_lenient, "Warn instead of failing when --config geometry differs");

  // evaluate
  std::string eval_pred, eval_manifest, eval_table, eval_out, eval_label = "model";
  auto* eval = app.add_subcommand("evaluate", "R-value and AUC per vertebra");
  eval->add_option("--predictions", eval_pred)->required();
  eval->add_option("--manifest", eval_manifest)->required();
  eval->add_option("--tscore-table", eval_table);
  eval->add_option("--out", eval_out, "Directory for report.md, report.json, scatter.csv");
  eval->add_option("--label", eval_label);

  // ensemble
  std::string ens_scheme = "mean", ens_out;
  std::vector<std::string> ens_inputs;
  auto* ens = app.add_subcommand("ensemble", "Average prediction tables");
  ens->add_option("--scheme", ens_scheme, "roi (5 members), all (6 members) or mean (any count)")
      ->check(CLI::IsMember({"roi", "all", "mean"}));
  ens->add_option("--out", ens_out)->required();
  ens->add_option("inputs", ens_inputs, "Prediction CSVs")->required();

  // plot-scatter
  std::string plot_scatter, plot_pred, plot_manifest, plot_table, plot_out;
  int plot_size = 480;
  auto* plot = app.add_subcommand("plot-scatter", "Per-vertebra scatter plots of prediction against ground truth");
  plot->add_option("--scatter", plot_scatter, "scatter.csv from evaluate");
  plot->add_option("--predictions", plot_pred);
  plot->add_option("--manifest", plot_manifest);
  plot->add_option("--tscore-table", plot_table);
  plot->add_option("--out", plot_out)->required();
  plot->add_option("--size", plot_size);

  // repro-synthetic
  ConfigArgs repro_cfg;
  std::optional<std::uint64_t> repro_seed;
  std::optional<int> repro_n, repro_epochs;
  std::string repro_out;
  bool repro_no_baselines = false, repro_fresh = false, repro_quiet = false;
  auto* repro = app.add_subcommand("repro-synthetic", "synth, split, train, predict, evaluate, ensemble in one run");
  repro_cfg.attach(repro);
  repro->add_option("--seed", repro_seed);
  repro->add_option("--n", repro_n, "Number of phantom scans");
  repro->add_option("--epochs", repro_epochs);
  repro->add_option("--out", repro_out);
  repro->add_flag("--no-baselines", repro_no_baselines, "Train only the multi-ROI model");
  repro->add_flag("--fresh", repro_fresh, "Regenerate phantoms even if a matching dataset exists");
  repro->add_flag("--quiet", repro_quiet);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      usage(e.what());
    }

    if (synth->parsed()) {
      RunConfig c = synth_cfg.resolve();
      if (synth_n) c.phantom.n_samples = *synth_n;
      if (synth_seed) c.seed = *synth_seed;
      PhantomSpec spec = c.phantom;
      spec.seed = c.seed;
      const auto m = generate_dataset(spec, synth_out);
      print("wrote " + std::to_string(m.rows.size()) + " scans to " + synth_out + "\n");
    } else if (split->parsed()) {
      const auto m = patient_grouped_split(load_manifest(split_manifest), ratios, split_seed);
      DatasetManifest out = m;
      // Paths stay relative to the input manifest's directory.
      const fs::path in_dir = fs::path(split_manifest).parent_path();
      const fs::path out_dir = fs::path(split_out).parent_path();
      if (fs::absolute(in_dir).lexically_normal() != fs::absolute(out_dir).lexically_normal()) {
        for (auto& r : out.rows) {
          r.image_path = fs::absolute(m.resolve(r.image_path)).lexically_normal().string();
          r.landmark_path = fs::absolute(m.resolve(r.landmark_path)).lexically_normal().string();
        }
      }
      save_manifest(out, split_out);
      print("train " + std::to_string(m.rows_in(Split::Train).size()) + ", val " +
            std::to_string(m.rows_in(Split::Val).size()) + ", test " + std::to_string(m.rows_in(Split::Test).size()) +
            "\n");
    } else if (extract->parsed()) {
      const RunConfig c = extract_cfg.resolve();
      const auto m = load_manifest(extract_manifest);
      std::vector<const ManifestRow*> rows;
      for (const auto& r : m.rows) {
        const bool wanted = extract_scans.empty()
                                ? static_cast<int>(rows.size()) < extract_limit
                                : std::find(extract_scans.begin(), extract_scans.end(), r.scan_id) != extract_scans.end();
        if (wanted) rows.push_back(&r);
      }
      if (!extract_scans.empty() && rows.size() != extract_scans.size()) usage("some --scan ids are not in the manifest");
      for (const ManifestRow* r : rows) {
        const auto crops = load_row_crops(m, *r, c.geometry, std::span(kAllRois.data(), kAllRois.size()));
        std::error_code ec;
        fs::create_directories(fs::path(extract_out) / r->scan_id, ec);
        for (RoiKind k : kAllRois) write_png(fs::path(extract_out) / r->scan_id / (std::string(roi_name(k)) + ".png"), crops[k]);
      }
      print("wrote crops for " + std::to_string(rows.size()) + " scans to " + extract_out + "\n");
    } else if (trn->parsed()) {
      RunConfig c = train_cfg.resolve();
      if (train_multi) {
        c.model = "multi";
      } else if (!train_roi.empty()) {
        c.model = train_roi;
      } else {
        usage("train needs --roi NAME or --multi");
      }
      if (!train_encoder.empty()) c.encoder = train_encoder;
      if (train_epochs) c.train.epochs = *train_epochs;
      if (train_batch) c.train.batch_size = *train_batch;
      if (train_lr) c.train.learning_rate = *train_lr;
      if (train_seed) c.seed = *train_seed;
      if (train_no_augment) c.train.augment_enabled = false;
      if (!train_out.empty()) c.output_dir = train_out;
      model_spec_from_name(c.model, c.encoder);
      const auto m = load_manifest(train_manifest);
      const auto r = train_run(c, m, c.output_dir);
      std::string msg = "trained " + c.model + " for " + std::to_string(c.train.epochs) + " epochs";
      if (!r.log.empty()) msg += ", final train loss " + text::format_double(r.log.back().train_loss);
      print(msg + "\ncheckpoints: " + r.best_checkpoint.string() + ", " + r.final_checkpoint.string() + "\n");
    } else if (pred->parsed()) {
      std::optional<GeometryConfig> geometry;
      if (!predict_cfg.file.empty() || !predict_cfg.sets.empty()) geometry = predict_cfg.resolve().geometry;
      const auto m = load_manifest(predict_manifest);
      const auto table = predict_checkpoint(predict_ckpt, m, parse_split(predict_split), geometry, !predict_lenient);
      save_predictions(table, predict_out);
      print("wrote " + std::to_string(table.rows.size()) + " predictions to " + predict_out + "\n");
    } else if (eval->parsed()) {
      const TScoreTable table = eval_table.empty() ? TScoreTable::default_table() : TScoreTable::load(eval_table);
      const auto report = evaluate(load_predictions(eval_pred), load_manifest(eval_manifest, true), table);
      const std::string md = format_report_table(report, eval_label);
      if (!eval_out.empty()) {
        std::error_code ec;
        fs::create_directories(eval_out, ec);
        text::write_file(fs::path(eval_out) / "report.md", md);
        text::write_file(fs::path(eval_out) / "report.json", format_report_json(report));
        text::write_file(fs::path(eval_out) / "scatter.csv", format_scatter_csv(report));
      }
      print(md);
    } else if (ens->parsed()) {
      std::vector<PredictionTable> members;
      for (const auto& p : ens_inputs) members.push_back(load_predictions(p));
      PredictionTable out;
      if (ens_scheme == "roi") {
        out = ensemble(EnsembleScheme::RoiOnly, members);
      } else if (ens_scheme == "all") {
        out = ensemble(EnsembleScheme::All, members);
      } else {
        out = ensemble_mean(members);
      }
      save_predictions(out, ens_out);
      print("wrote ensemble of " + std::to_string(members.size()) + " tables to " + ens_out + "\n");
    } else if (plot->parsed()) {
      std::vector<ScatterPoint> points;
      if (!plot_scatter.empty()) {
        points = parse_scatter_csv(text::read_file(plot_scatter));
      } else if (!plot_pred.empty() && !plot_manifest.empty()) {
        const TScoreTable table = plot_table.empty() ? TScoreTable::default_table() : TScoreTable::load(plot_table);
        points = evaluate(load_predictions(plot_pred), load_manifest(plot_manifest, true), table).scatter;
      } else {
        usage("plot-scatter needs --scatter, or --predictions with --manifest");
      }
      const auto written = write_scatter_plots(points, plot_out, plot_size);
      print("wrote " + std::to_string(written.size()) + " plots to " + plot_out + "\n");
    } else if (repro->parsed()) {
      ReproOptions opt;
      opt.config = repro_cfg.resolve(repro_defaults());
      if (repro_seed) opt.config.seed = *repro_seed;
      if (repro_n) opt.config.phantom.n_samples = *repro_n;
      if (repro_epochs) opt.config.train.epochs = *repro_epochs;
      if (!repro_out.empty()) opt.config.output_dir = repro_out;
      opt.baselines = !repro_no_baselines;
      opt.reuse_data = !repro_fresh;
      opt.quiet = repro_quiet;
      const auto result = run_repro_synthetic(opt);
      print(format_repro_report(result));
      print("report: " + (result.out_dir / "report.md").string() + "\n");
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace multiroi
