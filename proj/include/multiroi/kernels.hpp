#pragma once

// Data-parallel numeric kernels. Every kernel has two implementations:
//   serial::   plain reference loops, kept for testing and benchmarking
//   parallel:: OpenMP versions used by the library
// Each output element of a parallel kernel is produced by exactly one thread in
// a fixed summation order, so results do not depend on the thread count.

#include <span>

#include "multiroi/image.hpp"

namespace multiroi::kernels {

struct ConvShape {
  int batch = 1;
  int in_channels = 1;
  int in_height = 1;
  int in_width = 1;
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int pad = 1;

  int out_height() const noexcept { return (in_height + 2 * pad - kernel) / stride + 1; }
  int out_width() const noexcept { return (in_width + 2 * pad - kernel) / stride + 1; }
  std::size_t input_size() const noexcept;
  std::size_t output_size() const noexcept;
  std::size_t weight_size() const noexcept;
};

struct PoolShape {
  int batch = 1;
  int channels = 1;
  int in_height = 1;
  int in_width = 1;
  int kernel = 2;
  int stride = 2;
  int pad = 0;

  int out_height() const noexcept { return (in_height + 2 * pad - kernel) / stride + 1; }
  int out_width() const noexcept { return (in_width + 2 * pad - kernel) / stride + 1; }
};

/// Maps output pixel (u, v) to source position (x, y) in pixel-center units:
///   x = xx * u + xy * v + x0,  y = yx * u + yy * v + y0.
struct AffineMap {
  double xx = 1, xy = 0, x0 = 0;
  double yx = 0, yy = 1, y0 = 0;
};

enum class Border { Zero, Clamp };

namespace serial {
void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output);
void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
/// Accumulates into grad_weight / grad_bias.
void conv2d_backward_weight(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);
/// argmax holds the flat input index chosen for every output element.
void maxpool_forward(const PoolShape& s, std::span<const double> input, std::span<double> output,
                     std::span<int> argmax);
void affine_sample(const Image& src, const AffineMap& map, Border border, Image& dst);
}  // namespace serial

namespace parallel {
void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output);
void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
void conv2d_backward_weight(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);
void maxpool_forward(const PoolShape& s, std::span<const double> input, std::span<double> output,
                     std::span<int> argmax);
void affine_sample(const Image& src, const AffineMap& map, Border border, Image& dst);
}  // namespace parallel

/// Bilinear lookup at a pixel-center coordinate; shared by both sampling kernels.
float bilinear_at(const Image& src, double x, double y, Border border);

}  // namespace multiroi::kernels
