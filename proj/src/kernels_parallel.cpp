#include <algorithm>
#include <limits>

#include "multiroi/kernels.hpp"

namespace multiroi::kernels::parallel {

namespace {

// Output columns [lo, hi] whose input column ox*stride + tap - pad stays inside [0, in_width).
struct ColumnRange {
  int lo;
  int hi;
};

ColumnRange valid_columns(int tap, int pad, int stride, int in_width, int out_width) {
  const int lo_num = pad - tap;
  const int lo = lo_num <= 0 ? 0 : (lo_num + stride - 1) / stride;
  const int hi_num = in_width - 1 + pad - tap;
  if (hi_num < 0) return {0, -1};
  return {lo, std::min(out_width - 1, hi_num / stride)};
}

}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  const std::size_t in_plane = static_cast<std::size_t>(s.in_height) * s.in_width;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  const double* in_data = input.data();
  const double* w_data = weight.data();
  double* out_data = output.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.batch; ++n) {
    for (int oc = 0; oc < s.out_channels; ++oc) {
      double* out = out_data + (static_cast<std::size_t>(n) * s.out_channels + oc) * out_plane;
      std::fill(out, out + out_plane, bias.empty() ? 0.0 : bias[oc]);
      for (int ic = 0; ic < s.in_channels; ++ic) {
        const double* in = in_data + (static_cast<std::size_t>(n) * s.in_channels + ic) * in_plane;
        const double* wk = w_data + (static_cast<std::size_t>(oc) * s.in_channels + ic) * s.kernel * s.kernel;
        for (int ky = 0; ky < s.kernel; ++ky) {
          for (int kx = 0; kx < s.kernel; ++kx) {
            const double w = wk[ky * s.kernel + kx];
            const ColumnRange cols = valid_columns(kx, s.pad, s.stride, s.in_width, ow);
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s.stride + ky - s.pad;
              if (iy < 0 || iy >= s.in_height) continue;
              double* out_row = out + static_cast<std::size_t>(oy) * ow;
              const double* in_row = in + static_cast<std::size_t>(iy) * s.in_width + kx - s.pad;
              if (s.stride == 1) {
#pragma omp simd
                for (int ox = cols.lo; ox <= cols.hi; ++ox) out_row[ox] += w * in_row[ox];
              } else {
                for (int ox = cols.lo; ox <= cols.hi; ++ox) out_row[ox] += w * in_row[ox * s.stride];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  const std::size_t in_plane = static_cast<std::size_t>(s.in_height) * s.in_width;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  const double* g_data = grad_output.data();
  const double* w_data = weight.data();
  double* gin_data = grad_input.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < s.batch; ++n) {
    for (int ic = 0; ic < s.in_channels; ++ic) {
      double* gin = gin_data + (static_cast<std::size_t>(n) * s.in_channels + ic) * in_plane;
      std::fill(gin, gin + in_plane, 0.0);
      for (int oc = 0; oc < s.out_channels; ++oc) {
        const double* gout = g_data + (static_cast<std::size_t>(n) * s.out_channels + oc) * out_plane;
        const double* wk = w_data + (static_cast<std::size_t>(oc) * s.in_channels + ic) * s.kernel * s.kernel;
        for (int ky = 0; ky < s.kernel; ++ky) {
          for (int kx = 0; kx < s.kernel; ++kx) {
            const double w = wk[ky * s.kernel + kx];
            const ColumnRange cols = valid_columns(kx, s.pad, s.stride, s.in_width, ow);
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s.stride + ky - s.pad;
              if (iy < 0 || iy >= s.in_height) continue;
              const double* g_row = gout + static_cast<std::size_t>(oy) * ow;
              double* gin_row = gin + static_cast<std::size_t>(iy) * s.in_width + kx - s.pad;
              if (s.stride == 1) {
#pragma omp simd
                for (int ox = cols.lo; ox <= cols.hi; ++ox) gin_row[ox] += w * g_row[ox];
              } else {
                for (int ox = cols.lo; ox <= cols.hi; ++ox) gin_row[ox * s.stride] += w * g_row[ox];
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
  const std::size_t in_plane = static_cast<std::size_t>(s.in_height) * s.in_width;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  const double* in_data = input.data();
  const double* g_data = grad_output.data();
  double* gw_data = grad_weight.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < s.out_channels; ++oc) {
    for (int ic = 0; ic < s.in_channels; ++ic) {
      double* gw = gw_data + (static_cast<std::size_t>(oc) * s.in_channels + ic) * s.kernel * s.kernel;
      for (int ky = 0; ky < s.kernel; ++ky) {
        for (int kx = 0; kx < s.kernel; ++kx) {
          const ColumnRange cols = valid_columns(kx, s.pad, s.stride, s.in_width, ow);
          double acc = 0.0;
          for (int n = 0; n < s.batch; ++n) {
            const double* gout = g_data + (static_cast<std::size_t>(n) * s.out_channels + oc) * out_plane;
            const double* in = in_data + (static_cast<std::size_t>(n) * s.in_channels + ic) * in_plane;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s.stride + ky - s.pad;
              if (iy < 0 || iy >= s.in_height) continue;
              const double* g_row = gout + static_cast<std::size_t>(oy) * ow;
              const double* in_row = in + static_cast<std::size_t>(iy) * s.in_width + kx - s.pad;
              if (s.stride == 1) {
#pragma omp simd reduction(+ : acc)
                for (int ox = cols.lo; ox <= cols.hi; ++ox) acc += g_row[ox] * in_row[ox];
              } else {
                for (int ox = cols.lo; ox <= cols.hi; ++ox) acc += g_row[ox] * in_row[ox * s.stride];
              }
            }
          }
          gw[ky * s.kernel + kx] += acc;
        }
      }
    }
  }

  if (!grad_bias.empty()) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.out_channels; ++oc) {
      double acc = 0.0;
      for (int n = 0; n < s.batch; ++n) {
        const double* gout = g_data + (static_cast<std::size_t>(n) * s.out_channels + oc) * out_plane;
        for (std::size_t i = 0; i < out_plane; ++i) acc += gout[i];
      }
      grad_bias[oc] += acc;
    }
  }
}

void maxpool_forward(const PoolShape& s, std::span<const double> input, std::span<double> output,
                     std::span<int> argmax) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  const int planes = s.batch * s.channels;
#pragma omp parallel for schedule(static)
  for (int plane = 0; plane < planes; ++plane) {
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
#pragma omp parallel for schedule(static)
  for (int v = 0; v < dst.height; ++v) {
    for (int u = 0; u < dst.width; ++u) {
      const double x = map.xx * u + map.xy * v + map.x0;
      const double y = map.yx * u + map.yy * v + map.y0;
      dst.at(u, v) = bilinear_at(src, x, y, border);
    }
  }
}

}  // namespace multiroi::kernels::parallel
