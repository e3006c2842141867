#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace multiroi {

/// NCHW tensor of doubles. Feature matrices use h = w = 1.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, double fill = 0.0)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  std::size_t sample_size() const noexcept { return static_cast<std::size_t>(c) * h * w; }
  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * c + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * c + j]; }
  bool same_shape(const Tensor& o) const noexcept { return n == o.n && c == o.c && h == o.h && w == o.w; }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct Parameter {
  std::string name;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter(std::string name_, std::size_t size) : name(std::move(name_)), value(size, 0.0), grad(size, 0.0) {}
};

/// A differentiable layer. `forward` caches what `backward` needs; `apply` is the
/// side-effect-free inference path and may be called concurrently.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor apply(const Tensor& x) const = 0;
  virtual Tensor forward(const Tensor& x) = 0;
  /// Accumulates parameter gradients; returns the gradient w.r.t. the input.
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect(std::vector<Parameter*>& /*params*/) {}
  virtual void collect(std::vector<const Parameter*>& /*params*/) const {}
  /// apply() that also appends the layer's switch decisions (ReLU signs, max-pool
  /// winners) to `pattern`. Layers without switches add nothing.
  virtual Tensor apply_traced(const Tensor& x, std::vector<int>& /*pattern*/) const { return apply(x); }
};

class Conv2d final : public Layer {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int pad);

  void init_he(std::mt19937_64& rng, double gain = 1.0);
  /// The first layer of a network never needs its input gradient.
  void set_input_grad(bool enabled) { input_grad_ = enabled; }

  Tensor apply(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& params) override;
  void collect(std::vector<const Parameter*>& params) const override;

  Parameter& weight() { return weight_; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

 private:
  int in_, out_, kernel_, stride_, pad_;
  bool input_grad_ = true;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

class ReLU final : public Layer {
 public:
  Tensor apply(const Tensor& x) const override;
  Tensor apply_traced(const Tensor& x, std::vector<int>& pattern) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor output_;
};

class MaxPool2d final : public Layer {
 public:
  MaxPool2d(int kernel, int stride, int pad = 0) : kernel_(kernel), stride_(stride), pad_(pad) {}
  Tensor apply(const Tensor& x) const override;
  Tensor apply_traced(const Tensor& x, std::vector<int>& pattern) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor pool(const Tensor& x, std::vector<int>& argmax) const;
  int kernel_, stride_, pad_;
  Tensor input_shape_;
  std::vector<int> argmax_;
};

/// (N, C, H, W) -> (N, C, 1, 1) mean over the spatial plane.
class GlobalAvgPool final : public Layer {
 public:
  Tensor apply(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  int h_ = 0, w_ = 0;
};

/// Affine map on (N, in) feature rows: y = x W^T + b.
class Linear final : public Layer {
 public:
  Linear(std::string name, int in_features, int out_features);

  void init_uniform(std::mt19937_64& rng);
  Tensor apply(const Tensor& x) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& params) override;
  void collect(std::vector<const Parameter*>& params) const override;

  int in_features() const { return in_; }
  int out_features() const { return out_; }
  Parameter& weight() { return weight_; }
  const Parameter& weight() const { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  int in_, out_;
  Parameter weight_;
  Parameter bias_;
  Tensor input_;
};

/// relu(branch(x) + shortcut(x)); shortcut is identity or a strided 1x1 projection.
class ResidualBlock final : public Layer {
 public:
  ResidualBlock(std::vector<std::unique_ptr<Layer>> branch, std::unique_ptr<Conv2d> projection);

  Tensor apply(const Tensor& x) const override;
  Tensor apply_traced(const Tensor& x, std::vector<int>& pattern) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect(std::vector<Parameter*>& params) override;
  void collect(std::vector<const Parameter*>& params) const override;

 private:
  std::vector<std::unique_ptr<Layer>> branch_;
  std::unique_ptr<Conv2d> projection_;
  ReLU out_relu_;
};

}  // namespace multiroi
