#include "multiroi/plot.hpp"

#include <algorithm>
#include <cmath>

#include "multiroi/errors.hpp"

namespace multiroi {

namespace {

constexpr int kMargin = 40;

void line(RgbImage& img, int x0, int y0, int x1, int y1, std::uint8_t shade) {
  const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
  for (int i = 0; i <= steps; ++i) {
    const double t = steps == 0 ? 0.0 : static_cast<double>(i) / steps;
    const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, shade, shade, shade);
  }
}

void dot(RgbImage& img, int cx, int cy) {
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      if (dx * dx + dy * dy > 5) continue;
      const int x = cx + dx, y = cy + dy;
      if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, 31, 90, 180);
    }
  }
}

}  // namespace

RgbImage render_scatter(std::span<const ScatterPoint> points, int vertebra, int size) {
  if (size < 2 * kMargin + 10) {
    throw Error(ErrorCode::InvalidConfig, "cli_config_io", "plot_scatter", "plot size too small");
  }
  RgbImage img(size, size);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& p : points) {
    if (p.vertebra != vertebra) continue;
    lo = std::min({lo, p.gt, p.pred});
    hi = std::max({hi, p.gt, p.pred});
  }
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double pad = std::max(0.05 * (hi - lo), 1e-3);
  lo -= pad;
  hi += pad;
  const int span = size - 2 * kMargin;
  auto to_px = [&](double v) { return (v - lo) / (hi - lo) * span; };

  // Frame, ticks every tenth of the range, identity line.
  const int x0 = kMargin, x1 = size - kMargin, y0 = size - kMargin, y1 = kMargin;
  line(img, x0, y0, x1, y0, 0);
  line(img, x0, y0, x0, y1, 0);
  line(img, x1, y0, x1, y1, 0);
  line(img, x0, y1, x1, y1, 0);
  for (int i = 0; i <= 10; ++i) {
    const int t = kMargin + i * span / 10;
    line(img, t, y0, t, y0 + 5, 0);
    line(img, x0 - 5, size - t, x0, size - t, 0);
  }
  line(img, x0, y0, x1, y1, 160);

  for (const auto& p : points) {
    if (p.vertebra != vertebra) continue;
    dot(img, kMargin + static_cast<int>(std::lround(to_px(p.gt))),
        size - kMargin - static_cast<int>(std::lround(to_px(p.pred))));
  }
  return img;
}

std::vector<std::filesystem::path> write_scatter_plots(std::span<const ScatterPoint> points,
                                                       const std::filesystem::path& out_dir, int size) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cli_config_io", "plot_scatter", out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (int v = 0; v < 4; ++v) {
    const auto path = out_dir / ("scatter_L" + std::to_string(v + 1) + ".png");
    write_png(path, render_scatter(points, v, size));
    written.push_back(path);
  }
  return written;
}

}  // namespace multiroi
