#include "multiroi/layers.hpp"

#include <cmath>

#include "multiroi/errors.hpp"
#include "multiroi/kernels.hpp"

namespace multiroi {

namespace {

kernels::ConvShape conv_shape(const Tensor& x, int out, int kernel, int stride, int pad) {
  kernels::ConvShape s;
  s.batch = x.n;
  s.in_channels = x.c;
  s.in_height = x.h;
  s.in_width = x.w;
  s.out_channels = out;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  return s;
}

void add_inplace(Tensor& a, const Tensor& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

}  // namespace

// ---- Conv2d ----------------------------------------------------------------

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      weight_(name + ".weight", static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel),
      bias_(name + ".bias", static_cast<std::size_t>(out_channels)) {}

void Conv2d::init_he(std::mt19937_64& rng, double gain) {
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
  if (gain == 0.0) {
    std::fill(weight_.value.begin(), weight_.value.end(), 0.0);
    return;
  }
  const double fan_in = static_cast<double>(in_) * kernel_ * kernel_;
  std::normal_distribution<double> dist(0.0, gain * std::sqrt(2.0 / fan_in));
  for (double& w : weight_.value) w = dist(rng);
}

Tensor Conv2d::apply(const Tensor& x) const {
  if (x.c != in_) throw Error(ErrorCode::ShapeMismatch, "network", "conv2d", weight_.name);
  const auto s = conv_shape(x, out_, kernel_, stride_, pad_);
  if (s.out_height() <= 0 || s.out_width() <= 0) {
    throw Error(ErrorCode::SpatialTooSmall, "network", "conv2d", weight_.name);
  }
  Tensor y(x.n, out_, s.out_height(), s.out_width());
  kernels::parallel::conv2d_forward(s, x.data, weight_.value, bias_.value, y.data);
  return y;
}

Tensor Conv2d::forward(const Tensor& x) {
  input_ = x;
  return apply(x);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const auto s = conv_shape(input_, out_, kernel_, stride_, pad_);
  kernels::parallel::conv2d_backward_weight(s, input_.data, grad_out.data, weight_.grad, bias_.grad);
  if (!input_grad_) return {};
  Tensor gx(input_.n, input_.c, input_.h, input_.w);
  kernels::parallel::conv2d_backward_input(s, grad_out.data, weight_.value, gx.data);
  return gx;
}

void Conv2d::collect(std::vector<Parameter*>& params) {
  params.push_back(&weight_);
  params.push_back(&bias_);
}
void Conv2d::collect(std::vector<const Parameter*>& params) const {
  params.push_back(&weight_);
  params.push_back(&bias_);
}

// ---- ReLU ------------------------------------------------------------------

Tensor ReLU::apply(const Tensor& x) const {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor ReLU::apply_traced(const Tensor& x, std::vector<int>& pattern) const {
  for (double v : x.data) pattern.push_back(v > 0.0 ? 1 : 0);
  return apply(x);
}

Tensor ReLU::forward(const Tensor& x) {
  output_ = apply(x);
  return output_;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor gx = grad_out;
  for (std::size_t i = 0; i < gx.data.size(); ++i) {
    if (!(output_.data[i] > 0.0)) gx.data[i] = 0.0;
  }
  return gx;
}

// ---- MaxPool2d -------------------------------------------------------------

Tensor MaxPool2d::pool(const Tensor& x, std::vector<int>& argmax) const {
  kernels::PoolShape s{x.n, x.c, x.h, x.w, kernel_, stride_, pad_};
  if (s.out_height() <= 0 || s.out_width() <= 0) {
    throw Error(ErrorCode::SpatialTooSmall, "network", "maxpool", std::to_string(x.h) + "x" + std::to_string(x.w));
  }
  Tensor y(x.n, x.c, s.out_height(), s.out_width());
  argmax.assign(y.size(), 0);
  kernels::parallel::maxpool_forward(s, x.data, y.data, argmax);
  return y;
}

Tensor MaxPool2d::apply(const Tensor& x) const {
  std::vector<int> scratch;
  return pool(x, scratch);
}

Tensor MaxPool2d::apply_traced(const Tensor& x, std::vector<int>& pattern) const {
  std::vector<int> argmax;
  Tensor y = pool(x, argmax);
  pattern.insert(pattern.end(), argmax.begin(), argmax.end());
  return y;
}

Tensor MaxPool2d::forward(const Tensor& x) {
  input_shape_ = Tensor(x.n, x.c, x.h, x.w);
  input_shape_.data.clear();
  return pool(x, argmax_);
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  Tensor gx(input_shape_.n, input_shape_.c, input_shape_.h, input_shape_.w);
  for (std::size_t o = 0; o < grad_out.data.size(); ++o) gx.data[argmax_[o]] += grad_out.data[o];
  return gx;
}

// ---- GlobalAvgPool ---------------------------------------------------------

Tensor GlobalAvgPool::apply(const Tensor& x) const {
  Tensor y(x.n, x.c, 1, 1);
  const std::size_t plane = x.plane();
  const double inv = 1.0 / static_cast<double>(plane);
  for (std::size_t p = 0; p < static_cast<std::size_t>(x.n) * x.c; ++p) {
    double acc = 0.0;
    const double* src = x.data.data() + p * plane;
    for (std::size_t i = 0; i < plane; ++i) acc += src[i];
    y.data[p] = acc * inv;
  }
  return y;
}

Tensor GlobalAvgPool::forward(const Tensor& x) {
  h_ = x.h;
  w_ = x.w;
  return apply(x);
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  Tensor gx(grad_out.n, grad_out.c, h_, w_);
  const std::size_t plane = gx.plane();
  const double inv = 1.0 / static_cast<double>(plane);
  for (std::size_t p = 0; p < static_cast<std::size_t>(gx.n) * gx.c; ++p) {
    const double g = grad_out.data[p] * inv;
    std::fill(gx.data.begin() + static_cast<std::ptrdiff_t>(p * plane),
              gx.data.begin() + static_cast<std::ptrdiff_t>((p + 1) * plane), g);
  }
  return gx;
}

// ---- Linear ----------------------------------------------------------------

Linear::Linear(std::string name, int in_features, int out_features)
    : in_(in_features),
      out_(out_features),
      weight_(name + ".weight", static_cast<std::size_t>(in_features) * out_features),
      bias_(name + ".bias", static_cast<std::size_t>(out_features)) {}

void Linear::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : weight_.value) w = dist(rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

Tensor Linear::apply(const Tensor& x) const {
  if (static_cast<int>(x.sample_size()) != in_) {
    throw Error(ErrorCode::ShapeMismatch, "network", "linear",
                weight_.name + " expects " + std::to_string(in_) + " inputs, got " + std::to_string(x.sample_size()));
  }
  Tensor y(x.n, out_, 1, 1);
  for (int i = 0; i < x.n; ++i) {
    const double* xi = x.data.data() + static_cast<std::size_t>(i) * in_;
    for (int o = 0; o < out_; ++o) {
      const double* wo = weight_.value.data() + static_cast<std::size_t>(o) * in_;
      double acc = bias_.value[o];
      for (int k = 0; k < in_; ++k) acc += xi[k] * wo[k];
      y.data[static_cast<std::size_t>(i) * out_ + o] = acc;
    }
  }
  return y;
}

Tensor Linear::forward(const Tensor& x) {
  input_ = x;
  return apply(x);
}

Tensor Linear::backward(const Tensor& grad_out) {
  const int n = input_.n;
  for (int o = 0; o < out_; ++o) {
    double* gw = weight_.grad.data() + static_cast<std::size_t>(o) * in_;
    double gb = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = grad_out.data[static_cast<std::size_t>(i) * out_ + o];
      gb += g;
      const double* xi = input_.data.data() + static_cast<std::size_t>(i) * in_;
      for (int k = 0; k < in_; ++k) gw[k] += g * xi[k];
    }
    bias_.grad[o] += gb;
  }
  Tensor gx(input_.n, input_.c, input_.h, input_.w);
  for (int i = 0; i < n; ++i) {
    double* gxi = gx.data.data() + static_cast<std::size_t>(i) * in_;
    for (int o = 0; o < out_; ++o) {
      const double g = grad_out.data[static_cast<std::size_t>(i) * out_ + o];
      const double* wo = weight_.value.data() + static_cast<std::size_t>(o) * in_;
      for (int k = 0; k < in_; ++k) gxi[k] += g * wo[k];
    }
  }
  return gx;
}

void Linear::collect(std::vector<Parameter*>& params) {
  params.push_back(&weight_);
  params.push_back(&bias_);
}
void Linear::collect(std::vector<const Parameter*>& params) const {
  params.push_back(&weight_);
  params.push_back(&bias_);
}

// ---- ResidualBlock ---------------------------------------------------------

ResidualBlock::ResidualBlock(std::vector<std::unique_ptr<Layer>> branch, std::unique_ptr<Conv2d> projection)
    : branch_(std::move(branch)), projection_(std::move(projection)) {}

Tensor ResidualBlock::apply(const Tensor& x) const {
  Tensor y = x;
  for (const auto& layer : branch_) y = layer->apply(y);
  add_inplace(y, projection_ ? projection_->apply(x) : x);
  return out_relu_.apply(y);
}

Tensor ResidualBlock::apply_traced(const Tensor& x, std::vector<int>& pattern) const {
  Tensor y = x;
  for (const auto& layer : branch_) y = layer->apply_traced(y, pattern);
  add_inplace(y, projection_ ? projection_->apply(x) : x);
  return out_relu_.apply_traced(y, pattern);
}

Tensor ResidualBlock::forward(const Tensor& x) {
  Tensor y = x;
  for (auto& layer : branch_) y = layer->forward(y);
  add_inplace(y, projection_ ? projection_->forward(x) : x);
  return out_relu_.forward(y);
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
  const Tensor g = out_relu_.backward(grad_out);
  Tensor gb = g;
  for (auto it = branch_.rbegin(); it != branch_.rend(); ++it) gb = (*it)->backward(gb);
  add_inplace(gb, projection_ ? projection_->backward(g) : g);
  return gb;
}

void ResidualBlock::collect(std::vector<Parameter*>& params) {
  for (auto& layer : branch_) layer->collect(params);
  if (projection_) projection_->collect(params);
}
void ResidualBlock::collect(std::vector<const Parameter*>& params) const {
  for (const auto& layer : branch_) layer->collect(params);
  if (projection_) projection_->collect(params);
}

}  // namespace multiroi
