#include <cmath>
#include <random>

#include "criteria.hpp"
#include "doctest.h"
#include "multiroi/encoder.hpp"
#include "multiroi/errors.hpp"
#include "multiroi/model.hpp"
#include "support.hpp"

using namespace multiroi;
using namespace multiroi::testing;

namespace {

Tensor random_input(int n, int c, int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t(n, c, side, side);
  for (double& v : t.data) v = u(rng);
  return t;
}

std::vector<RoiCropSet> random_samples(int batch, int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  std::vector<RoiCropSet> out(batch);
  for (auto& s : out) {
    for (Image& c : s.crops) {
      c = Image(side, side);
      for (float& p : c.pixels) p = u(rng);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("encoder registry: feature sizes") {
  CHECK(find_encoder("vgg16").feature_dim == 512);
  CHECK(find_encoder("resnet50").feature_dim == 2048);
  CHECK(find_encoder("tiny").feature_dim == 16);
  CHECK_THROWS_AS(find_encoder("alexnet"), Error);
}

TEST_CASE("vgg16 encoder: (2, 512) features, finite on zeros, identical rows") {
  std::mt19937_64 rng(1);
  const auto enc = build_encoder("vgg16", rng);
  Tensor x = random_input(1, 3, 32, 4);
  Tensor pair(2, 3, 32, 32);
  std::copy(x.data.begin(), x.data.end(), pair.data.begin());
  std::copy(x.data.begin(), x.data.end(), pair.data.begin() + static_cast<long>(x.size()));
  const Tensor f = enc->apply(pair);
  CHECK(f.n == 2);
  CHECK(f.c == 512);
  for (int j = 0; j < 512; ++j) CHECK(f(0, j) == f(1, j));

  const Tensor z = enc->apply(Tensor(1, 3, 32, 32));
  for (double v : z.data) CHECK(std::isfinite(v));
}

TEST_CASE("encoder: input below the minimum size") {
  std::mt19937_64 rng(1);
  const auto enc = build_encoder("vgg16", rng);
  try {
    enc->apply(Tensor(1, 3, 16, 16));
    FAIL("expected SpatialTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpatialTooSmall);
  }
}

TEST_CASE("multi-ROI model: head shapes") {
  const RoiModel model(multi_roi_spec("vgg16"), 3);
  CHECK(model.input_count() == 7);
  REQUIRE(model.concat_head() != nullptr);
  CHECK(model.concat_head()->in_features() == 3584);
  const auto samples = random_samples(3, 32, 5);
  const MultiHeadPrediction p = model.infer(samples);
  CHECK(p.per_roi.size() == 7);
  for (const auto& h : p.per_roi) CHECK(h.size() == 3);
  CHECK(p.concat.size() == 3);
}

TEST_CASE("model: same seed and input give bit-identical outputs") {
  const auto samples = random_samples(2, 16, 6);
  const RoiModel a(multi_roi_spec("tiny"), 9);
  const RoiModel b(multi_roi_spec("tiny"), 9);
  CHECK(a.predict_bmd(samples) == b.predict_bmd(samples));
  CHECK(a.predict_bmd(samples) == a.predict_bmd(samples));
  for (const auto& v : a.predict_bmd(samples))
    for (double x : v) CHECK(std::isfinite(x));
}

TEST_CASE("model: missing crop") {
  auto samples = random_samples(1, 16, 6);
  samples[0][RoiKind::T12] = Image{};
  const RoiModel m(multi_roi_spec("tiny"), 1);
  try {
    m.infer(samples);
    FAIL("expected MissingRoi");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingRoi);
  }
  // A cervical-only model ignores the T12 slot.
  const RoiModel cervi(baseline_spec("cervi", "tiny"), 1);
  CHECK(cervi.predict_bmd(samples).size() == 1);
}

TEST_CASE("baseline specs map to the table rows") {
  CHECK(baseline_spec("chest").inputs == std::vector<RoiKind>{RoiKind::ChestGlobal});
  CHECK(baseline_spec("cervi").inputs == std::vector<RoiKind>{RoiKind::Cervical});
  CHECK(baseline_spec("lumbar").inputs == std::vector<RoiKind>{RoiKind::T12});
  CHECK(baseline_spec("clavi").inputs.size() == 2);
  CHECK(baseline_spec("ribcage").inputs.size() == 2);
  CHECK(model_spec_from_name("CERVICAL").inputs == std::vector<RoiKind>{RoiKind::Cervical});
}

TEST_CASE("single-ROI model depends only on its crop") {
  auto samples = random_samples(2, 16, 8);
  const RoiModel m(single_roi_spec(RoiKind::Cervical, "tiny"), 2);
  const auto before = m.predict_bmd(samples);
  for (RoiKind k : kAllRois) {
    if (k == RoiKind::Cervical) continue;
    for (float& p : samples[0][k].pixels) p = 1.0F - p;
  }
  CHECK(m.predict_bmd(samples) == before);
}

TEST_CASE("input adapter: centered, scaled, triplicated") {
  Tensor x(1, 1, 2, 2);
  x.data = {0.1, 0.2, 0.3, 0.4};
  const Tensor t = triplicate_channels(center_crops(x));
  CHECK(t.c == 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(t.data[c * 4 + 0] == doctest::Approx(-0.15 * kInputGain));
    CHECK(t.data[c * 4 + 3] == doctest::Approx(0.15 * kInputGain));
  }
}

TEST_CASE("loss: shape mismatch") {
  MultiHeadPrediction p;
  p.concat.resize(2);
  std::vector<BmdVector> target(3);
  CHECK_THROWS_AS(multihead_loss(p, target), Error);
}

TEST_CASE("loss arithmetic criterion") {
  const CheckResult r = check_loss_arithmetic(5);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("gradient check criterion") {
  const CheckResult r = check_gradient(13);
  INFO(r.detail);
  CHECK(r.pass);
}

TEST_CASE("backward: forward/infer agree and grads zero after zero_grad") {
  RoiModel m(multi_roi_spec("mini"), 4);
  const Tensor x = random_input(7, 1, 8, 3);
  const std::vector<BmdVector> target{{1.0, 1.0, 1.0, 1.0}};
  const MultiHeadPrediction a = m.forward(x);
  CHECK(a.concat == m.infer(x).concat);
  m.backward(a, target);
  m.zero_grad();
  for (const Parameter* p : m.parameters())
    for (double g : p->grad) CHECK(g == 0.0);
}

TEST_CASE("weight sharing: one encoder and one per-ROI head serve every input") {
  RoiModel m(multi_roi_spec("tiny"), 3);
  for (RoiKind k : kAllRois) {
    CHECK(&m.encoder_for(k) == &m.encoder_for(RoiKind::ClavicleL));
    CHECK(&m.head_for(k) == &m.head_for(RoiKind::ClavicleL));
  }
  std::size_t encoder_params = 0;
  std::vector<Parameter*> enc;
  const_cast<Encoder&>(m.encoder_for(RoiKind::T12)).collect(enc);
  for (const Parameter* p : enc) encoder_params += p->value.size();
  std::size_t total = 0;
  for (const Parameter* p : m.parameters()) total += p->value.size();
  const int fd = m.feature_dim();
  CHECK(total == encoder_params + static_cast<std::size_t>(fd * 4 + 4) + static_cast<std::size_t>(7 * fd * 4 + 4));

  // A training step moves the shared weights once; every ROI keeps reading the same values.
  const auto samples = random_samples(2, 16, 4);
  const Tensor x = stack_rois(samples, m.spec());
  const std::vector<BmdVector> target(2, BmdVector{1, 1, 1, 1});
  m.zero_grad();
  m.backward(m.forward(x), target);
  for (Parameter* p : m.parameters())
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= 0.1 * p->grad[i];
  CHECK(&m.encoder_for(RoiKind::Cervical) == &m.encoder_for(RoiKind::ChestGlobal));
}

TEST_CASE("concat head responds to every ROI") {
  const RoiModel m(multi_roi_spec("tiny"), 8);
  const auto samples = random_samples(1, 16, 9);
  const BmdVector base = m.infer(samples).concat[0];
  for (RoiKind k : kAllRois) {
    auto changed = samples;
    for (float& p : changed[0][k].pixels) p = 1.0F - p;
    INFO(roi_name(k));
    CHECK(m.infer(changed).concat[0] != base);
  }
}
