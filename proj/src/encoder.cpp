#include "multiroi/encoder.hpp"

#include <cmath>

#include "multiroi/errors.hpp"

namespace multiroi {

const std::vector<EncoderSpec>& encoder_registry() {
  static const std::vector<EncoderSpec> registry = {
      {"vgg11", 512, 32},    {"vgg16", 512, 32},    {"resnet18", 512, 32}, {"resnet34", 512, 32},
      {"resnet50", 2048, 32}, {"tiny", 16, 8},       {"mini", 8, 4},
  };
  return registry;
}

const EncoderSpec& find_encoder(std::string_view name) {
  for (const auto& spec : encoder_registry()) {
    if (spec.name == name) return spec;
  }
  throw Error(ErrorCode::UnknownEncoder, "network", "find_encoder", std::string(name));
}

Encoder::Encoder(EncoderSpec spec, std::vector<std::unique_ptr<Layer>> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)) {}

void Encoder::check_input(const Tensor& x) const {
  if (x.c != 3) throw Error(ErrorCode::ShapeMismatch, "network", "encode", "encoder expects 3 channels");
  if (x.h < spec_.min_input || x.w < spec_.min_input) {
    throw Error(ErrorCode::SpatialTooSmall, "network", "encode",
                spec_.name + " needs >= " + std::to_string(spec_.min_input) + "px, got " + std::to_string(x.h) +
                    "x" + std::to_string(x.w));
  }
}

namespace {
void check_finite(const Tensor& t) {
  for (double v : t.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteActivation, "network", "encode", "non-finite feature");
  }
}
}  // namespace

Tensor Encoder::apply(const Tensor& x) const {
  check_input(x);
  Tensor y = x;
  for (const auto& layer : layers_) y = layer->apply(y);
  y = pool_.apply(y);
  check_finite(y);
  return y;
}

std::vector<int> Encoder::activation_pattern(const Tensor& x) const {
  check_input(x);
  std::vector<int> pattern;
  Tensor y = x;
  for (const auto& layer : layers_) y = layer->apply_traced(y, pattern);
  return pattern;
}

Tensor Encoder::forward(const Tensor& x) {
  check_input(x);
  Tensor y = x;
  for (auto& layer : layers_) y = layer->forward(y);
  y = pool_.forward(y);
  check_finite(y);
  return y;
}

void Encoder::backward(const Tensor& grad_features) {
  Tensor g = pool_.backward(grad_features);
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

void Encoder::collect(std::vector<Parameter*>& params) {
  for (auto& layer : layers_) layer->collect(params);
}
void Encoder::collect(std::vector<const Parameter*>& params) const {
  for (const auto& layer : layers_) layer->collect(params);
}

namespace {

using Layers = std::vector<std::unique_ptr<Layer>>;

struct Builder {
  std::mt19937_64& rng;
  Layers layers;
  int channels = 3;
  int conv_index = 0;

  Conv2d* conv(int out, int kernel, int stride, int pad) {
    auto c = std::make_unique<Conv2d>("conv" + std::to_string(conv_index++), channels, out, kernel, stride, pad);
    c->init_he(rng);
    if (layers.empty()) c->set_input_grad(false);
    Conv2d* raw = c.get();
    layers.push_back(std::move(c));
    layers.push_back(std::make_unique<ReLU>());
    channels = out;
    return raw;
  }
  void pool(int kernel, int stride, int pad = 0) { layers.push_back(std::make_unique<MaxPool2d>(kernel, stride, pad)); }
};

// VGG configurations: channel counts, 0 = 2x2 max pool.
Layers vgg(std::mt19937_64& rng, const std::vector<int>& cfg) {
  Builder b{rng, {}};
  for (int v : cfg) {
    if (v == 0) {
      b.pool(2, 2);
    } else {
      b.conv(v, 3, 1, 1);
    }
  }
  return std::move(b.layers);
}

// Residual trunks without normalization layers; the last conv of every branch
// starts at zero so each block is initially the identity (plus projection).
Layers resnet(std::mt19937_64& rng, const std::vector<int>& blocks, bool bottleneck) {
  Builder b{rng, {}};
  b.conv(64, 7, 2, 3);
  b.pool(3, 2, 1);
  const int widths[4] = {64, 128, 256, 512};
  const int expansion = bottleneck ? 4 : 1;
  for (int stage = 0; stage < 4; ++stage) {
    for (int i = 0; i < blocks[stage]; ++i) {
      const int stride = (stage > 0 && i == 0) ? 2 : 1;
      const int in = b.channels;
      const int width = widths[stage];
      const int out = width * expansion;
      const std::string prefix = "block" + std::to_string(stage) + "_" + std::to_string(i);
      Layers branch;
      auto add_conv = [&](const std::string& name, int cin, int cout, int k, int s, int p, bool relu, bool zero) {
        auto c = std::make_unique<Conv2d>(prefix + "." + name, cin, cout, k, s, p);
        c->init_he(rng, zero ? 0.0 : 1.0);
        branch.push_back(std::move(c));
        if (relu) branch.push_back(std::make_unique<ReLU>());
      };
      if (bottleneck) {
        add_conv("conv1", in, width, 1, 1, 0, true, false);
        add_conv("conv2", width, width, 3, stride, 1, true, false);
        add_conv("conv3", width, out, 1, 1, 0, false, true);
      } else {
        add_conv("conv1", in, width, 3, stride, 1, true, false);
        add_conv("conv2", width, out, 3, 1, 1, false, true);
      }
      std::unique_ptr<Conv2d> proj;
      if (stride != 1 || in != out) {
        proj = std::make_unique<Conv2d>(prefix + ".proj", in, out, 1, stride, 0);
        proj->init_he(rng);
      }
      b.layers.push_back(std::make_unique<ResidualBlock>(std::move(branch), std::move(proj)));
      b.channels = out;
    }
  }
  return std::move(b.layers);
}

}  // namespace

std::unique_ptr<Encoder> build_encoder(std::string_view name, std::mt19937_64& rng) {
  const EncoderSpec& spec = find_encoder(name);
  Layers layers;
  if (name == "vgg11") {
    layers = vgg(rng, {64, 0, 128, 0, 256, 256, 0, 512, 512, 0, 512, 512, 0});
  } else if (name == "vgg16") {
    layers = vgg(rng, {64, 64, 0, 128, 128, 0, 256, 256, 256, 0, 512, 512, 512, 0, 512, 512, 512, 0});
  } else if (name == "resnet18") {
    layers = resnet(rng, {2, 2, 2, 2}, false);
  } else if (name == "resnet34") {
    layers = resnet(rng, {3, 4, 6, 3}, false);
  } else if (name == "resnet50") {
    layers = resnet(rng, {3, 4, 6, 3}, true);
  } else if (name == "tiny") {
    Builder b{rng, {}};
    b.conv(8, 3, 2, 1);
    b.pool(2, 2);
    b.conv(16, 3, 1, 1);
    layers = std::move(b.layers);
  } else {  // mini
    Builder b{rng, {}};
    b.conv(4, 3, 1, 1);
    b.pool(2, 2);
    b.conv(8, 3, 1, 1);
    layers = std::move(b.layers);
  }
  return std::make_unique<Encoder>(spec, std::move(layers));
}

}  // namespace multiroi
