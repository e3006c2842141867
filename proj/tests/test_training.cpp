#include <cmath>
#include <filesystem>

#include "criteria.hpp"
#include "doctest.h"
#include "multiroi/augment.hpp"
#include "multiroi/checkpoint.hpp"
#include "multiroi/errors.hpp"
#include "multiroi/pipeline.hpp"
#include "multiroi/text.hpp"
#include "support.hpp"

using namespace multiroi;
using namespace multiroi::testing;
namespace fs = std::filesystem;

namespace {

RunConfig small_run(std::uint64_t seed) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.encoder = "tiny";
  cfg.geometry.out_height = 32;
  cfg.geometry.out_width = 32;
  cfg.train.batch_size = 8;
  cfg.train.learning_rate = 0.05;
  cfg.train.momentum = 0.9;
  return cfg;
}

}  // namespace

TEST_CASE("augment: identity config leaves the image alone") {
  std::mt19937_64 rng(1);
  const PhantomSample s = generate_phantom(small_phantom(1, 1, 128), rng);
  const auto [img, lm] = augment(s.image, s.landmarks, AugmentConfig::identity(), rng);
  CHECK(mean_abs_diff(img, s.image) <= 1.0 / 255.0);
  for (int i = 0; i < kLandmarkCount; ++i) {
    CHECK(lm.points[i].x == doctest::Approx(s.landmarks.points[i].x).epsilon(1e-12));
    CHECK(lm.points[i].y == doctest::Approx(s.landmarks.points[i].y).epsilon(1e-12));
  }
}

TEST_CASE("augment: mirror swaps sides") {
  LandmarkSet lm = uniform_landmarks(0.5, 0.5);
  lm[Landmark::ClavL1] = {0.2, 0.3};
  AugmentParams p;
  p.hflip = true;
  const auto [img, out] = apply_augment(Image(64, 64, 0.5F), lm, p);
  CHECK(out[Landmark::ClavR1].x == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(out[Landmark::ClavR1].y == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("augment: seeded draws repeat") {
  std::mt19937_64 rng(1);
  const PhantomSample s = generate_phantom(small_phantom(1, 1, 96), rng);
  std::mt19937_64 a(77), b(77);
  const auto x = augment(s.image, s.landmarks, AugmentConfig{}, a);
  const auto y = augment(s.image, s.landmarks, AugmentConfig{}, b);
  CHECK(x.first == y.first);
  CHECK(x.second == y.second);
  AugmentConfig bad;
  bad.scale_min = 2.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("train: zero epochs saves the initial weights and an empty log") {
  TempDir dir("train0");
  const DatasetManifest m = split_phantom_dataset(small_phantom(20, 2, 96), dir.path() / "data", 2);
  RunConfig cfg = small_run(5);
  cfg.train.epochs = 0;
  const TrainResult r = train_run(cfg, m, dir.path() / "run");
  CHECK(r.log.empty());
  CHECK(text::read_file(r.log_path.string()).empty());

  RoiModel initial(model_spec_from_name(cfg.model, cfg.encoder), cfg.seed);
  initial.set_output_bias(mean_target(m, Split::Train));
  const LoadedCheckpoint best = load_checkpoint(r.best_checkpoint);
  const LoadedCheckpoint fin = load_checkpoint(r.final_checkpoint);
  const auto want = std::as_const(initial).parameters();
  const auto got_best = std::as_const(*best.model).parameters();
  const auto got_final = std::as_const(*fin.model).parameters();
  REQUIRE(want.size() == got_final.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(want[i]->value == got_best[i]->value);
    CHECK(want[i]->value == got_final[i]->value);
  }
}

TEST_CASE("train: empty training split") {
  TempDir dir("train_empty");
  DatasetManifest m = generate_dataset(small_phantom(4, 2, 64), dir.path() / "data");
  for (auto& r : m.rows) r.split = Split::Test;
  try {
    train_run(small_run(1), m, dir.path() / "run");
    FAIL("expected EmptyManifest");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyManifest);
  }
}

TEST_CASE("train: log records every epoch and predictions cover the split") {
  TempDir dir("train_log");
  const DatasetManifest m = split_phantom_dataset(small_phantom(30, 3, 96), dir.path() / "data", 3);
  RunConfig cfg = small_run(3);
  cfg.train.epochs = 3;
  const TrainResult r = train_run(cfg, m, dir.path() / "run");
  CHECK(r.log.size() == 3);
  const auto lines = text::split(text::trim(text::read_file(r.log_path.string())), '\n');
  CHECK(lines.size() == 3);
  for (const auto& e : r.log) CHECK(std::isfinite(e.train_loss));
  const PredictionTable p = predict_checkpoint(r.final_checkpoint, m, Split::Test);
  CHECK(p.rows.size() == m.rows_in(Split::Test).size());
  CHECK(format_predictions(p) == format_predictions(predict_checkpoint(r.final_checkpoint, m, Split::Test)));

  GeometryConfig other = cfg.geometry;
  other.width_margin = 1.5;
  CHECK_THROWS_AS(predict_checkpoint(r.final_checkpoint, m, Split::Test, other, true), Error);
  CHECK(predict_checkpoint(r.final_checkpoint, m, Split::Test, other, false).rows.size() == p.rows.size());
}

TEST_CASE("train: single-ROI model on a concentrated phantom converges") {
  // All BMD signal in the cervical region, no nuisance: the cervical model alone can learn it.
  TempDir dir("train_conv");
  PhantomSpec spec = small_phantom(300, 4, 256);
  spec.noise_level = 0.0;
  spec.signal_split = {0, 0, 1, 0, 0, 0};
  const DatasetManifest m = split_phantom_dataset(spec, dir.path() / "data", 4);
  RunConfig cfg = repro_defaults();
  cfg.model = "cervi";
  cfg.train.epochs = 20;
  const TrainResult r = train_run(cfg, m, dir.path() / "run");
  REQUIRE(!r.log.empty());
  const double final_loss = r.log.back().train_loss;
  INFO("initial ", r.initial_train_loss, " final ", final_loss);
  CHECK(final_loss < 0.2 * r.initial_train_loss);

  const PredictionTable p = predict_checkpoint(r.final_checkpoint, m, Split::Test);
  const EvalReport rep = evaluate(p, m, TScoreTable::default_table());
  INFO("test mean r ", rep.mean_r);
  CHECK(rep.mean_r >= 0.98);
}

TEST_CASE("reproducibility criterion") {
  const CheckResult r = check_reproducibility(31);
  INFO(r.detail);
  CHECK(r.pass);
}
