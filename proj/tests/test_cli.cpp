#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "multiroi/cli.hpp"
#include "multiroi/checkpoint.hpp"
#include "multiroi/manifest.hpp"
#include "multiroi/predictions.hpp"
#include "multiroi/text.hpp"
#include "support.hpp"

using namespace multiroi;
using namespace multiroi::testing;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "multiroi_bmd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("cli: synth -> split -> train -> predict -> evaluate -> ensemble -> plot") {
  TempDir dir("cli");
  const std::string d = dir.path().string();
  REQUIRE(cli({"synth", "--out", d + "/data", "--n", "40", "--seed", "3", "--set", "phantom.image_size=96"}) == 0);
  REQUIRE(cli({"split", "--manifest", d + "/data/manifest.csv", "--out", d + "/data/split.csv", "--seed", "3"}) == 0);
  const DatasetManifest m = load_manifest(d + "/data/split.csv");
  CHECK(m.rows.size() == 40);
  CHECK(m.rows_in(Split::Unset).empty());

  CHECK(cli({"extract-rois", "--manifest", d + "/data/split.csv", "--out", d + "/crops", "--limit", "1"}) == 0);
  CHECK(fs::exists(fs::path(d) / "crops" / m.rows[0].scan_id / "CERVICAL.png"));

  REQUIRE(cli({"train", "--manifest", d + "/data/split.csv", "--multi", "--encoder", "tiny", "--epochs", "0",
               "--out", d + "/run", "--set", "geometry.out_height=32", "--set", "geometry.out_width=32"}) == 0);
  CHECK(fs::exists(fs::path(d) / "run" / "checkpoint_final" / "weights.bin"));
  CHECK(load_checkpoint(fs::path(d) / "run" / "checkpoint_final").model->spec().name == "multi");

  REQUIRE(cli({"predict", "--checkpoint", d + "/run/checkpoint_final", "--manifest", d + "/data/split.csv",
               "--split", "test", "--out", d + "/pred.csv"}) == 0);
  CHECK(load_predictions(d + "/pred.csv").rows.size() == m.rows_in(Split::Test).size());

  // Oracle predictions: every row's ground truth.
  PredictionTable oracle;
  for (const auto& r : m.rows) oracle.rows.push_back({r.scan_id, r.patient_id, {*r.gt[0], *r.gt[1], *r.gt[2], *r.gt[3]}});
  save_predictions(oracle, d + "/oracle.csv");
  REQUIRE(cli({"evaluate", "--predictions", d + "/oracle.csv", "--manifest", d + "/data/split.csv", "--out",
               d + "/eval", "--label", "oracle"}) == 0);
  const auto report = nlohmann::json::parse(text::read_file(d + "/eval/report.json"));
  CHECK(report["average"]["r_value"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report["average"]["auc"].get<double>() == 1.0);

  CHECK(cli({"ensemble", "--scheme", "mean", "--out", d + "/ens.csv", d + "/oracle.csv", d + "/oracle.csv"}) == 0);
  CHECK(load_predictions(d + "/ens.csv") == oracle);
  CHECK(cli({"ensemble", "--scheme", "roi", "--out", d + "/ens.csv", d + "/oracle.csv"}) == 1);

  CHECK(cli({"plot-scatter", "--scatter", d + "/eval/scatter.csv", "--out", d + "/plots"}) == 0);
  for (int v = 1; v <= 4; ++v) CHECK(fs::exists(fs::path(d) / "plots" / ("scatter_L" + std::to_string(v) + ".png")));
}

TEST_CASE("cli: usage errors exit 2, runtime errors exit 1") {
  CHECK(cli({}) == 2);
  CHECK(cli({"frobnicate"}) == 2);
  CHECK(cli({"train", "--manifest", "x.csv"}) == 2);
  CHECK(cli({"predict", "--checkpoint", "/nonexistent", "--manifest", "/nonexistent.csv", "--out", "p.csv"}) == 1);
  CHECK(cli({"--help"}) == 0);
}
