#pragma once

#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "semlink/image.hpp"

namespace semlink {

enum class FilterKind { median, gaussian, bm3d };

std::string_view to_string(FilterKind kind);
FilterKind parse_filter_kind(std::string_view name);

// A post-filter and its strength: median window, Gaussian sigma (pixels), or
// BM3D noise standard deviation on the 0-255 scale.
struct FilterSpec {
  FilterKind kind = FilterKind::median;
  int window = 3;
  double sigma = 0.0;
  double noise_level = 0.0;

  static FilterSpec median(int window = 3) { return {FilterKind::median, window, 0.0, 0.0}; }
  static FilterSpec gaussian(double sigma) { return {FilterKind::gaussian, 3, sigma, 0.0}; }
  static FilterSpec bm3d(double noise_level) { return {FilterKind::bm3d, 3, 0.0, noise_level}; }

  // The single strength parameter of this kind.
  double parameter() const;
  void validate() const;
};

// Window x window median with replicate borders; window must be odd and >= 3.
GrayImage median_filter(const GrayImage& img, int window = 3);

// Sampled 2-D Gaussian, radius ceil(3 sigma), normalised to unit sum.
struct GaussianKernel {
  int radius = 0;
  std::vector<double> weights;  // (2r+1)^2, row-major

  int size() const { return 2 * radius + 1; }
  double at(int dx, int dy) const {
    return weights[static_cast<std::size_t>((dy + radius) * size() + (dx + radius))];
  }
};

GaussianKernel build_gaussian_kernel(double sigma);

// Direct 2-D convolution with replicate borders, quantized once at the end.
GrayImage gaussian_filter(const GrayImage& img, double sigma);
// Same convolution without the final quantization.
std::vector<double> gaussian_filter_real(const GrayImage& img, double sigma);

GrayImage apply_filter(const GrayImage& img, const FilterSpec& spec);

// Per-kind (snr_db, parameter) knots with linear interpolation between them.
// Queries outside the knot range throw RangeError.
class FilterSchedule {
 public:
  using Knots = std::vector<std::pair<double, double>>;

  FilterSchedule() = default;

  // Paper anchors at 0 dB, tuned interior knots, floors at 20 dB.
  static FilterSchedule defaults();

  // Knots must be strictly ascending in SNR and non-increasing in value.
  void set(FilterKind kind, Knots knots);
  const Knots& knots(FilterKind kind) const;
  bool has(FilterKind kind) const { return knots_.count(kind) != 0; }

  FilterSpec at(double snr_db, FilterKind kind) const;

 private:
  std::map<FilterKind, Knots> knots_;
};

FilterSpec filter_schedule(double snr_db, FilterKind kind,
                           const FilterSchedule& schedule = FilterSchedule::defaults());

}  // namespace semlink
