#include "semlink/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "semlink/error.hpp"

namespace semlink {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw DimensionError("image dimensions must be positive, got " + std::to_string(width) +
                         "x" + std::to_string(height));
  }
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) {
    throw DimensionError("image dimensions must be positive, got " + std::to_string(width) +
                         "x" + std::to_string(height));
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DimensionError("pixel buffer holds " + std::to_string(pixels_.size()) +
                         " values, expected " + std::to_string(width * height));
  }
}

std::uint8_t GrayImage::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return pixels_[index(x, y)];
}

std::uint8_t quantize_pixel(double value) {
  const double r = std::round(value);  // half away from zero
  if (!(r > 0.0)) return 0;             // also maps NaN to 0
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

GrayImage quantize(int width, int height, std::span<const double> samples) {
  std::vector<std::uint8_t> px(samples.size());
  std::transform(samples.begin(), samples.end(), px.begin(), quantize_pixel);
  return GrayImage(width, height, std::move(px));
}

namespace {

struct PngImage {
  png_image img{};
  PngImage() {
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&img); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

GrayImage read_png(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot open " + path.string());
  PngImage png;
  if (!png_image_begin_read_from_file(&png.img, path.c_str())) {
    throw IoError("cannot read " + path.string() + ": " + png.img.message);
  }
  const auto format = png.img.format;
  if (format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_COLORMAP | PNG_FORMAT_FLAG_ALPHA)) {
    throw FormatError(path.string() + ": only single-channel grayscale PNG is supported");
  }
  if (format & PNG_FORMAT_FLAG_LINEAR) {
    throw FormatError(path.string() + ": 16-bit PNG is not supported");
  }
  png.img.format = PNG_FORMAT_GRAY;
  const int width = static_cast<int>(png.img.width);
  const int height = static_cast<int>(png.img.height);
  GrayImage out(width, height);
  if (!png_image_finish_read(&png.img, nullptr, out.pixels().data(), width, nullptr)) {
    throw IoError("cannot decode " + path.string() + ": " + png.img.message);
  }
  return out;
}

void write_png(const GrayImage& img, const std::filesystem::path& path) {
  if (img.empty()) throw DimensionError("cannot write an empty image");
  PngImage png;
  png.img.width = static_cast<png_uint_32>(img.width());
  png.img.height = static_cast<png_uint_32>(img.height());
  png.img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png.img, path.c_str(), 0, img.pixels().data(), img.width(),
                               nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + png.img.message);
  }
}

}  // namespace semlink
