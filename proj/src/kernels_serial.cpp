#include <cmath>
#include <limits>

#include "multiroi/kernels.hpp"

namespace multiroi::kernels {

std::size_t ConvShape::input_size() const noexcept {
  return static_cast<std::size_t>(batch) * in_channels * in_height * in_width;
}
std::size_t ConvShape::output_size() const noexcept {
  return static_cast<std::size_t>(batch) * out_channels * out_height() * out_width();
}
std::size_t ConvShape::weight_size() const noexcept {
  return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
}

float bilinear_at(const Image& src, double x, double y, Border border) {
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const double fx = x - fx0;
  const double fy = y - fy0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);

  auto fetch = [&](int xi, int yi) -> double {
    if (border == Border::Clamp) {
      xi = xi < 0 ? 0 : (xi >= src.width ? src.width - 1 : xi);
      yi = yi < 0 ? 0 : (yi >= src.height ? src.height - 1 : yi);
    } else if (xi < 0 || yi < 0 || xi >= src.width || yi >= src.height) {
      return 0.0;
    }
    return src.pixels[static_cast<std::size_t>(yi) * src.width + xi];
  };

  const double top = (1.0 - fx) * fetch(x0, y0) + fx * fetch(x0 + 1, y0);
  const double bottom = (1.0 - fx) * fetch(x0, y0 + 1) + fx * fetch(x0 + 1, y0 + 1);
  return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

namespace serial {

void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  for (int n = 0; n < s.batch; ++n) {
    for (int oc = 0; oc < s.out_channels; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[oc];
          for (int ic = 0; ic < s.in_channels; ++ic) {
            for (int ky = 0; ky < s.kernel; ++ky) {
              const int iy = oy * s.stride + ky - s.pad;
              if (iy < 0 || iy >= s.in_height) continue;
              for (int kx = 0; kx < s.kernel; ++kx) {
                const int ix = ox * s.stride + kx - s.pad;
                if (ix < 0 || ix >= s.in_width) continue;
                const double w = weight[((static_cast<std::size_t>(oc) * s.in_channels + ic) * s.kernel + ky) *
                                            s.kernel + kx];
                const double v = input[((static_cast<std::size_t>(n) * s.in_channels + ic) * s.in_height + iy) *
                                           s.in_width + ix];
                acc += w * v;
              }
            }
          }
          output[((static_cast<std::size_t>(n) * s.out_channels + oc) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  for (int n = 0; n < s.batch; ++n) {
    for (int oc = 0; oc < s.out_channels; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double g = grad_output[((static_cast<std::size_t>(n) * s.out_channels + oc) * oh + oy) * ow + ox];
          for (int ic = 0; ic < s.in_channels; ++ic) {
            for (int ky = 0; ky < s.kernel; ++ky) {
              const int iy = oy * s.stride + ky - s.pad;
              if (iy < 0 || iy >= s.in_height) continue;
              for (int kx = 0; kx < s.kernel; ++kx) {
                const int ix = ox * s.stride + kx - s.pad;
                if (ix < 0 || ix >= s.in_width) continue;
                const double w = weight[((static_cast<std::size_t>(oc) * s.in_channels + ic) * s.kernel + ky) *
                                            s.kernel + kx];
                grad_input[((static_cast<std::size_t>(n) * s.in_channels + ic) * s.in_height + iy) * s.in_width +
                           ix] += w * g;
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  for (int n = 0; n < s.batch; ++n) {
    for (int oc = 0; oc < s.out_channels; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double g = grad_output[((static_cast<std::size_t>(n) * s.out_channels + oc) * oh + oy) * ow + ox];
          if (!grad_bias.empty()) grad_bias[oc] += g;
          for (int ic = 0; ic < s.in_channels; ++ic) {
            for (int ky = 0; ky < s.kernel; ++ky) {
              const int iy = oy * s.stride + ky - s.pad;
              if (iy < 0 || iy >= s.in_height) continue;
              for (int kx = 0; kx < s.kernel; ++kx) {
                const int ix = ox * s.stride + kx - s.pad;
                if (ix < 0 || ix >= s.in_width) continue;
                grad_weight[((static_cast<std::size_t>(oc) * s.in_channels + ic) * s.kernel + ky) * s.kernel + kx] +=
                    g * input[((static_cast<std::size_t>(n) * s.in_channels + ic) * s.in_height + iy) * s.in_width +
                              ix];
              }
            }
          }
        }
      }
    }
  }
}

void maxpool_forward(const PoolShape& s, std::span<const double> input, std::span<double> output,
                     std::span<int> argmax) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  for (int plane = 0; plane < s.batch * s.channels; ++plane) {
    const std::size_t in_base = static_cast<std::size_t>(plane) * s.in_height * s.in_width;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = -1;
        for (int ky = 0; ky < s.kernel; ++ky) {
          const int iy = oy * s.stride + ky - s.pad;
          if (iy < 0 || iy >= s.in_height) continue;
          for (int kx = 0; kx < s.kernel; ++kx) {
            const int ix = ox * s.stride + kx - s.pad;
            if (ix < 0 || ix >= s.in_width) continue;
            const std::size_t idx = in_base + static_cast<std::size_t>(iy) * s.in_width + ix;
            if (input[idx] > best || best_idx < 0) {
              best = input[idx];
              best_idx = static_cast<int>(idx);
            }
          }
        }
        const std::size_t o = (static_cast<std::size_t>(plane) * oh + oy) * ow + ox;
        output[o] = best;
        argmax[o] = best_idx;
      }
    }
  }
}

void affine_sample(const Image& src, const AffineMap& map, Border border, Image& dst) {
  for (int v = 0; v < dst.height; ++v) {
    for (int u = 0; u < dst.width; ++u) {
      const double x = map.xx * u + map.xy * v + map.x0;
      const double y = map.yx * u + map.yy * v + map.y0;
      dst.at(u, v) = bilinear_at(src, x, y, border);
    }
  }
}

}  // namespace serial
}  // namespace multiroi::kernels
