#include "multiroi/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "multiroi/errors.hpp"
#include "multiroi/kernels.hpp"

namespace multiroi {

Image::Image(int w, int h, float fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), fill) {}

RgbImage::RgbImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

void RgbImage::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[i] = r;
  rgb[i + 1] = g;
  rgb[i + 2] = b;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode, const char* op) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw Error(ErrorCode::IoError, "image", op, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(const std::filesystem::path& path, const char* op) {
  throw Error(ErrorCode::IoError, "image", op, "libpng failure on " + path.string());
}

void write_rows(const std::filesystem::path& path, int width, int height, int color_type,
                const std::vector<png_bytep>& rows) {
  FilePtr f = open_file(path, "wb", "write_png");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    png_fail(path, "write_png");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    png_fail(path, "write_png");
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 2);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint8_t to_byte(float v) {
  const float c = v < 0.0F ? 0.0F : (v > 1.0F ? 1.0F : v);
  return static_cast<std::uint8_t>(std::lround(c * 255.0F));
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb", "read_png");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path, "read_png");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path, "read_png");
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 2);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  if (depth == 16) png_set_swap(png);  // host order below assumes little endian
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> buffer(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = rows[y];
    for (int x = 0; x < width; ++x) {
      if (out_depth == 16) {
        const unsigned v = row[2 * x] | (static_cast<unsigned>(row[2 * x + 1]) << 8);
        img.at(x, y) = static_cast<float>(v) / 65535.0F;
      } else {
        img.at(x, y) = static_cast<float>(row[x]) / 255.0F;
      }
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "image", "write_png", path.string());
  std::vector<std::uint8_t> buffer(image.pixels.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = to_byte(image.pixels[i]);
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * image.width;
  write_rows(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, rows);
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> buffer = image.rgb;
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * image.width * 3;
  write_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, rows);
}

Image quantize_8bit(const Image& image) {
  Image out = image;
  for (float& p : out.pixels) p = static_cast<float>(to_byte(p)) / 255.0F;
  return out;
}

Image resize_bilinear(const Image& image, int out_width, int out_height) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "image", "resize_bilinear", "");
  Image out(out_width, out_height);
  kernels::AffineMap map;
  map.xx = static_cast<double>(image.width) / out_width;
  map.yy = static_cast<double>(image.height) / out_height;
  map.x0 = 0.5 * map.xx - 0.5;
  map.y0 = 0.5 * map.yy - 0.5;
  kernels::parallel::affine_sample(image, map, kernels::Border::Clamp, out);
  return out;
}

double mean_abs_diff(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorCode::ShapeMismatch, "image", "mean_abs_diff", "image sizes differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]);
  return a.pixels.empty() ? 0.0 : acc / static_cast<double>(a.pixels.size());
}

}  // namespace multiroi
