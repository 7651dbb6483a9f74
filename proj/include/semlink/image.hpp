#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace semlink {

// 8-bit grayscale raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t operator()(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& operator()(int x, int y) { return pixels_[index(x, y)]; }

  // Replicate-border access: coordinates are clamped into the image.
  std::uint8_t clamped(int x, int y) const;

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Round half away from zero, then clamp into [0, 255].
std::uint8_t quantize_pixel(double value);

// Builds an 8-bit image from floating-point samples (same layout).
GrayImage quantize(int width, int height, std::span<const double> samples);

// 8-bit grayscale PNG only. Color, palette, alpha, and non-8-bit depths are
// rejected with FormatError; unreadable files with IoError.
GrayImage read_png(const std::filesystem::path& path);
void write_png(const GrayImage& img, const std::filesystem::path& path);

}  // namespace semlink
