#include "multiroi/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "multiroi/errors.hpp"

namespace multiroi {

ModelSpec multi_roi_spec(std::string_view encoder) {
  return ModelSpec{"multi", std::string(encoder), {kAllRois.begin(), kAllRois.end()}, true};
}

ModelSpec single_roi_spec(RoiKind kind, std::string_view encoder) {
  return ModelSpec{std::string(roi_name(kind)), std::string(encoder), {kind}, false};
}

const std::vector<std::string>& baseline_names() {
  static const std::vector<std::string> names = {"cervi", "clavi", "lumbar", "ribcage", "chest"};
  return names;
}

ModelSpec baseline_spec(std::string_view name, std::string_view encoder) {
  ModelSpec spec{std::string(name), std::string(encoder), {}, false};
  if (name == "cervi") {
    spec.inputs = {RoiKind::Cervical};
  } else if (name == "clavi") {
    spec.inputs = {RoiKind::ClavicleL, RoiKind::ClavicleR};
  } else if (name == "lumbar") {
    spec.inputs = {RoiKind::T12};
  } else if (name == "ribcage") {
    spec.inputs = {RoiKind::RibcageL, RoiKind::RibcageR};
  } else if (name == "chest") {
    spec.inputs = {RoiKind::ChestGlobal};
  } else {
    throw Error(ErrorCode::InvalidConfig, "network", "baseline_spec", "unknown baseline " + std::string(name));
  }
  return spec;
}

ModelSpec model_spec_from_name(std::string_view name, std::string_view encoder) {
  if (name == "multi") return multi_roi_spec(encoder);
  if (const auto kind = roi_from_name(name)) return single_roi_spec(*kind, encoder);
  return baseline_spec(name, encoder);
}

Tensor stack_rois(std::span<const RoiCropSet> samples, const ModelSpec& spec) {
  const int k_count = static_cast<int>(spec.inputs.size());
  const int batch = static_cast<int>(samples.size());
  if (batch == 0) throw Error(ErrorCode::ShapeMismatch, "network", "forward", "empty batch");
  int h = -1;
  int w = -1;
  for (const auto& sample : samples) {
    for (RoiKind kind : spec.inputs) {
      const Image& crop = sample[kind];
      if (crop.empty()) throw Error(ErrorCode::MissingRoi, "network", "forward", std::string(roi_name(kind)));
      if (h < 0) {
        h = crop.height;
        w = crop.width;
      } else if (crop.height != h || crop.width != w) {
        throw Error(ErrorCode::ShapeMismatch, "network", "forward", "crop sizes differ");
      }
    }
  }
  Tensor t(batch * k_count, 1, h, w);
  const std::size_t plane = t.plane();
  for (int b = 0; b < batch; ++b) {
    for (int k = 0; k < k_count; ++k) {
      const auto& px = samples[b][spec.inputs[k]].pixels;
      std::copy(px.begin(), px.end(), t.data.begin() + static_cast<std::ptrdiff_t>((b * k_count + k) * plane));
    }
  }
  return t;
}

Tensor center_crops(const Tensor& x) {
  Tensor y = x;
  const std::size_t size = x.sample_size();
  for (int i = 0; i < x.n; ++i) {
    double* p = y.data.data() + static_cast<std::size_t>(i) * size;
    double mean = 0.0;
    for (std::size_t j = 0; j < size; ++j) mean += p[j];
    mean /= static_cast<double>(size);
    for (std::size_t j = 0; j < size; ++j) p[j] = kInputGain * (p[j] - mean);
  }
  return y;
}

Tensor triplicate_channels(const Tensor& x) {
  if (x.c != 1) throw Error(ErrorCode::ShapeMismatch, "network", "encode", "expected single-channel ROI batch");
  Tensor y(x.n, 3, x.h, x.w);
  const std::size_t plane = x.plane();
  for (int i = 0; i < x.n; ++i) {
    const auto src = x.data.begin() + static_cast<std::ptrdiff_t>(i * plane);
    for (int ch = 0; ch < 3; ++ch) {
      std::copy(src, src + static_cast<std::ptrdiff_t>(plane),
                y.data.begin() + static_cast<std::ptrdiff_t>((i * 3 + ch) * plane));
    }
  }
  return y;
}

double mse(std::span<const BmdVector> pred, std::span<const BmdVector> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "network", "loss",
                std::to_string(pred.size()) + " predictions vs " + std::to_string(target.size()) + " targets");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (int v = 0; v < kVertebrae; ++v) {
      const double d = pred[i][v] - target[i][v];
      acc += d * d;
    }
  }
  return acc / static_cast<double>(pred.size() * kVertebrae);
}

double multihead_loss(const MultiHeadPrediction& pred, std::span<const BmdVector> target) {
  double acc = 0.0;
  for (const auto& head : pred.per_roi) acc += mse(head, target);
  acc += mse(pred.concat, target);
  return acc / static_cast<double>(pred.per_roi.size() + 1);
}

// ---- RoiModel --------------------------------------------------------------

RoiModel::RoiModel(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  if (spec_.inputs.empty()) throw Error(ErrorCode::InvalidConfig, "network", "build_model", "model has no inputs");
  std::mt19937_64 rng(seed);
  encoder_ = build_encoder(spec_.encoder, rng);
  const int f = encoder_->feature_dim();
  shared_head_ = std::make_unique<Linear>("shared_head", f, kVertebrae);
  shared_head_->init_uniform(rng);
  if (spec_.multi_head) {
    concat_head_ = std::make_unique<Linear>("concat_head", f * input_count(), kVertebrae);
    concat_head_->init_uniform(rng);
  }
}

Tensor RoiModel::encode(const Tensor& rois) const { return encoder_->apply(triplicate_channels(center_crops(rois))); }

std::vector<int> RoiModel::activation_pattern(const Tensor& rois) const {
  return encoder_->activation_pattern(triplicate_channels(center_crops(rois)));
}

MultiHeadPrediction RoiModel::assemble(const Tensor& head_out, const Tensor* concat_out, int batch) const {
  const int k_count = input_count();
  MultiHeadPrediction pred;
  pred.per_roi.assign(k_count, std::vector<BmdVector>(batch));
  pred.concat.assign(batch, BmdVector{});
  for (int b = 0; b < batch; ++b) {
    for (int k = 0; k < k_count; ++k) {
      for (int v = 0; v < kVertebrae; ++v) pred.per_roi[k][b][v] = head_out(b * k_count + k, v);
    }
    for (int v = 0; v < kVertebrae; ++v) {
      if (concat_out) {
        pred.concat[b][v] = (*concat_out)(b, v);
      } else {
        double acc = 0.0;
        for (int k = 0; k < k_count; ++k) acc += pred.per_roi[k][b][v];
        pred.concat[b][v] = acc / k_count;
      }
    }
  }
  return pred;
}

namespace {
Tensor as_concat_rows(const Tensor& features, int batch) {
  Tensor t = features;
  t.n = batch;
  t.c = static_cast<int>(features.size() / static_cast<std::size_t>(batch));
  t.h = 1;
  t.w = 1;
  return t;
}
}  // namespace

MultiHeadPrediction RoiModel::infer(const Tensor& rois) const {
  const int batch = rois.n / input_count();
  const Tensor feats = encode(rois);
  const Tensor head_out = shared_head_->apply(feats);
  if (concat_head_) {
    const Tensor concat_out = concat_head_->apply(as_concat_rows(feats, batch));
    return assemble(head_out, &concat_out, batch);
  }
  return assemble(head_out, nullptr, batch);
}

MultiHeadPrediction RoiModel::infer(std::span<const RoiCropSet> samples) const {
  return infer(stack_rois(samples, spec_));
}

std::vector<BmdVector> RoiModel::predict_bmd(std::span<const RoiCropSet> samples) const {
  return infer(samples).concat;
}

MultiHeadPrediction RoiModel::forward(const Tensor& rois) {
  const int batch = rois.n / input_count();
  const Tensor feats = encoder_->forward(triplicate_channels(center_crops(rois)));
  const Tensor head_out = shared_head_->forward(feats);
  if (concat_head_) {
    const Tensor concat_out = concat_head_->forward(as_concat_rows(feats, batch));
    return assemble(head_out, &concat_out, batch);
  }
  return assemble(head_out, nullptr, batch);
}

double RoiModel::backward(const MultiHeadPrediction& pred, std::span<const BmdVector> target) {
  const double loss = multihead_loss(pred, target);
  if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteActivation, "network", "loss", "non-finite loss");

  const int batch = pred.batch();
  const int k_count = input_count();
  const double scale = 2.0 / (static_cast<double>(batch) * kVertebrae * (k_count + 1));

  Tensor grad_head(batch * k_count, kVertebrae, 1, 1);
  Tensor grad_concat(batch, kVertebrae, 1, 1);
  for (int b = 0; b < batch; ++b) {
    for (int v = 0; v < kVertebrae; ++v) {
      grad_concat(b, v) = scale * (pred.concat[b][v] - target[b][v]);
      for (int k = 0; k < k_count; ++k) {
        double g = scale * (pred.per_roi[k][b][v] - target[b][v]);
        if (!concat_head_) g += grad_concat(b, v) / k_count;
        grad_head(b * k_count + k, v) = g;
      }
    }
  }

  Tensor grad_feats = shared_head_->backward(grad_head);
  if (concat_head_) {
    const Tensor gc = concat_head_->backward(grad_concat);
    for (std::size_t i = 0; i < grad_feats.data.size(); ++i) grad_feats.data[i] += gc.data[i];
  }
  encoder_->backward(grad_feats);
  return loss;
}

void RoiModel::zero_grad() {
  for (Parameter* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

std::vector<Parameter*> RoiModel::parameters() {
  std::vector<Parameter*> params;
  encoder_->collect(params);
  shared_head_->collect(params);
  if (concat_head_) concat_head_->collect(params);
  return params;
}

std::vector<const Parameter*> RoiModel::parameters() const {
  std::vector<const Parameter*> params;
  static_cast<const Encoder&>(*encoder_).collect(params);
  static_cast<const Linear&>(*shared_head_).collect(params);
  if (concat_head_) static_cast<const Linear&>(*concat_head_).collect(params);
  return params;
}

void RoiModel::set_output_bias(const BmdVector& bias) {
  std::copy(bias.begin(), bias.end(), shared_head_->bias().value.begin());
  if (concat_head_) std::copy(bias.begin(), bias.end(), concat_head_->bias().value.begin());
}

int RoiModel::index_of(RoiKind kind) const {
  const auto it = std::find(spec_.inputs.begin(), spec_.inputs.end(), kind);
  if (it == spec_.inputs.end()) throw Error(ErrorCode::MissingRoi, "network", "forward", std::string(roi_name(kind)));
  return static_cast<int>(it - spec_.inputs.begin());
}

const Encoder& RoiModel::encoder_for(RoiKind kind) const {
  index_of(kind);
  return *encoder_;
}

const Linear& RoiModel::head_for(RoiKind kind) const {
  index_of(kind);
  return *shared_head_;
}

}  // namespace multiroi
