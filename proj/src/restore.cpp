#include "semlink/restore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semlink/bm3d.hpp"
#include "semlink/error.hpp"

namespace semlink {

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::median: return "median";
    case FilterKind::gaussian: return "gaussian";
    case FilterKind::bm3d: return "bm3d";
  }
  return "?";
}

FilterKind parse_filter_kind(std::string_view name) {
  for (auto k : {FilterKind::median, FilterKind::gaussian, FilterKind::bm3d}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown filter kind '" + std::string(name) + "'");
}

double FilterSpec::parameter() const {
  switch (kind) {
    case FilterKind::median: return window;
    case FilterKind::gaussian: return sigma;
    case FilterKind::bm3d: return noise_level;
  }
  return 0.0;
}

void FilterSpec::validate() const {
  switch (kind) {
    case FilterKind::median:
      if (window < 3 || window % 2 == 0) {
        throw ConfigError("median window must be odd and >= 3, got " + std::to_string(window));
      }
      break;
    case FilterKind::gaussian:
      if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
      break;
    case FilterKind::bm3d:
      if (!(noise_level > 0.0)) throw ConfigError("bm3d noise level must be positive");
      break;
  }
}

GrayImage median_filter(const GrayImage& img, int window) {
  FilterSpec::median(window).validate();
  const int r = window / 2;
  GrayImage out(img.width(), img.height());
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(window * window));
  const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      std::size_t n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) buf[n++] = img.clamped(x + dx, y + dy);
      }
      std::nth_element(buf.begin(), mid, buf.end());
      out(x, y) = *mid;
    }
  }
  return out;
}

GaussianKernel build_gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("gaussian sigma must be positive and finite");
  }
  GaussianKernel k;
  k.radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int n = k.size();
  k.weights.resize(static_cast<std::size_t>(n * n));
  const double two_s2 = 2.0 * sigma * sigma;
  // The 1/(2 pi sigma^2) prefactor cancels in the normalisation.
  double sum = 0.0;
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) / two_s2);
      k.weights[static_cast<std::size_t>((dy + k.radius) * n + dx + k.radius)] = w;
      sum += w;
    }
  }
  for (double& w : k.weights) w /= sum;
  return k;
}

std::vector<double> gaussian_filter_real(const GrayImage& img, double sigma) {
  const GaussianKernel k = build_gaussian_kernel(sigma);
  std::vector<double> out(img.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int dy = -k.radius; dy <= k.radius; ++dy) {
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
          acc += k.at(dx, dy) * img.clamped(x - dx, y - dy);
        }
      }
      out[static_cast<std::size_t>(y) * img.width() + x] = acc;
    }
  }
  return out;
}

GrayImage gaussian_filter(const GrayImage& img, double sigma) {
  return quantize(img.width(), img.height(), gaussian_filter_real(img, sigma));
}

GrayImage apply_filter(const GrayImage& img, const FilterSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case FilterKind::median: return median_filter(img, spec.window);
    case FilterKind::gaussian: return gaussian_filter(img, spec.sigma);
    case FilterKind::bm3d: return bm3d_filter(img, spec.noise_level);
  }
  throw ConfigError("unknown filter kind");
}

FilterSchedule FilterSchedule::defaults() {
  FilterSchedule s;
  s.set(FilterKind::median, {{0.0, 3.0}, {20.0, 3.0}});
  // Interior knots from tools/tune_schedule (mean PSNR over data/set12, seed 9001).
  s.set(FilterKind::gaussian, {{0.0, 1.3}, {2.0, 1.3}, {4.0, 1.2}, {6.0, 1.0}, {8.0, 0.7}, {10.0, 0.5}, {20.0, 0.5}});
  s.set(FilterKind::bm3d, {{0.0, 41.0}, {2.0, 41.0}, {4.0, 41.0}, {6.0, 26.0}, {8.0, 20.0}, {10.0, 11.0},
                           {12.0, 5.0}, {20.0, 5.0}});
  return s;
}

void FilterSchedule::set(FilterKind kind, Knots knots) {
  if (knots.empty()) throw ConfigError("schedule for " + std::string(to_string(kind)) + " is empty");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto [snr, value] = knots[i];
    if (!std::isfinite(snr) || !std::isfinite(value)) {
      throw ConfigError("schedule knots must be finite");
    }
    if (i > 0 && !(snr > knots[i - 1].first)) {
      throw ConfigError("schedule knots for " + std::string(to_string(kind)) +
                        " must be strictly ascending in SNR");
    }
    if (i > 0 && value > knots[i - 1].second) {
      throw ConfigError("schedule values for " + std::string(to_string(kind)) +
                        " must be non-increasing in SNR");
    }
  }
  if (kind == FilterKind::median) {
    for (const auto& [snr, value] : knots) {
      if (value != knots.front().second) {
        throw ConfigError("median window schedule must be constant");
      }
    }
  }
  knots_[kind] = std::move(knots);
}

const FilterSchedule::Knots& FilterSchedule::knots(FilterKind kind) const {
  const auto it = knots_.find(kind);
  if (it == knots_.end()) {
    throw ConfigError("no schedule configured for " + std::string(to_string(kind)));
  }
  return it->second;
}

FilterSpec FilterSchedule::at(double snr_db, FilterKind kind) const {
  const Knots& k = knots(kind);
  if (!(snr_db >= k.front().first && snr_db <= k.back().first)) {
    throw RangeError("SNR " + std::to_string(snr_db) + " dB outside the " +
                     std::string(to_string(kind)) + " schedule range [" +
                     std::to_string(k.front().first) + ", " + std::to_string(k.back().first) +
                     "]");
  }
  double value = k.back().second;
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    const auto [s0, v0] = k[i];
    const auto [s1, v1] = k[i + 1];
    if (snr_db >= s0 && snr_db <= s1) {
      value = snr_db == s1 ? v1 : v0 + (v1 - v0) * (snr_db - s0) / (s1 - s0);
      break;
    }
  }
  FilterSpec spec;
  spec.kind = kind;
  switch (kind) {
    case FilterKind::median: spec.window = static_cast<int>(std::lround(value)); break;
    case FilterKind::gaussian: spec.sigma = value; break;
    case FilterKind::bm3d: spec.noise_level = value; break;
  }
  spec.validate();
  return spec;
}

FilterSpec filter_schedule(double snr_db, FilterKind kind, const FilterSchedule& schedule) {
  return schedule.at(snr_db, kind);
}

}  // namespace semlink
