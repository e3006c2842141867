#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace multiroi {

/// Single-channel image, row-major, intensities nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, float fill = 0.0F);

  bool empty() const noexcept { return width <= 0 || height <= 0; }
  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// 8-bit RGB raster used for plots.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage(int w, int h, std::uint8_t fill = 255);
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

/// Reads an 8- or 16-bit grayscale PNG (color inputs are converted to gray),
/// scaling intensities to [0, 1].
Image read_png(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG; values are clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path& path, const Image& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Rounds to the nearest 8-bit level, i.e. what a PNG round trip produces.
Image quantize_8bit(const Image& image);

/// Bilinear resize of the whole image (pixel-center aligned, edge samples clamped).
Image resize_bilinear(const Image& image, int out_width, int out_height);

double mean_abs_diff(const Image& a, const Image& b);

}  // namespace multiroi
