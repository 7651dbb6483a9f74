#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "semlink/image.hpp"

namespace semlink {

// Fraction of differing positions; throws DimensionError on length mismatch.
double ber(std::span<const std::uint8_t> reference, std::span<const std::uint8_t> received);

double mse(const GrayImage& f, const GrayImage& g);

// 10 log10(max^2 / mse); +infinity when the images are identical.
double psnr(const GrayImage& f, const GrayImage& g, double max_value = 255.0);

enum class SsimWindow {
  global,          // one window over the whole image, unbiased (N-1) moments
  gaussian_11x11,  // 11x11 Gaussian window (sigma 1.5), mean over valid positions
};

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double l = 255.0;  // dynamic range
  SsimWindow window = SsimWindow::gaussian_11x11;

  double c1() const { return (k1 * l) * (k1 * l); }
  double c2() const { return (k2 * l) * (k2 * l); }
  void validate() const;
};

double ssim(const GrayImage& f, const GrayImage& g, const SsimParams& params = {});

enum class Stage { decoded, median, gaussian, bm3d };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);

struct MetricsReport {
  double ber = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double snr_db = 0.0;
  Stage stage = Stage::decoded;
};

// BER compares the 8-bit serialisations of both images.
MetricsReport evaluate(const GrayImage& truth, const GrayImage& test, double snr_db, Stage stage,
                       const SsimParams& params = {});

}  // namespace semlink
