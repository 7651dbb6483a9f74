#include "semlink/metrics.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "semlink/error.hpp"

namespace semlink {

namespace {

void require_same_shape(const GrayImage& f, const GrayImage& g) {
  if (f.width() != g.width() || f.height() != g.height()) {
    throw DimensionError("image sizes differ: " + std::to_string(f.width()) + "x" +
                         std::to_string(f.height()) + " vs " + std::to_string(g.width()) + "x" +
                         std::to_string(g.height()));
  }
  if (f.empty()) throw DimensionError("cannot compare empty images");
}

double ssim_formula(double mu_f, double mu_g, double var_f, double var_g, double cov,
                    double c1, double c2) {
  return ((2.0 * mu_f * mu_g + c1) * (2.0 * cov + c2)) /
         ((mu_f * mu_f + mu_g * mu_g + c1) * (var_f + var_g + c2));
}

double ssim_global(const GrayImage& f, const GrayImage& g, const SsimParams& p) {
  const auto a = f.pixels();
  const auto b = g.pixels();
  const auto n = static_cast<double>(a.size());
  double sum_f = 0.0;
  double sum_g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum_f += a[i];
    sum_g += b[i];
  }
  const double mu_f = sum_f / n;
  const double mu_g = sum_g / n;
  double vf = 0.0;
  double vg = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double df = a[i] - mu_f;
    const double dg = b[i] - mu_g;
    vf += df * df;
    vg += dg * dg;
    cov += df * dg;
  }
  const double denom = a.size() > 1 ? n - 1.0 : 1.0;
  return ssim_formula(mu_f, mu_g, vf / denom, vg / denom, cov / denom, p.c1(), p.c2());
}

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::vector<double> ssim_window() {
  std::vector<double> w(kWindow * kWindow);
  const int r = kWindow / 2;
  double sum = 0.0;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double v = std::exp(-(x * x + y * y) / (2.0 * kWindowSigma * kWindowSigma));
      w[static_cast<std::size_t>((y + r) * kWindow + x + r)] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

double ssim_windowed(const GrayImage& f, const GrayImage& g, const SsimParams& p) {
  if (f.width() < kWindow || f.height() < kWindow) {
    throw DimensionError("windowed SSIM needs images of at least 11x11 pixels");
  }
  static const std::vector<double> w = ssim_window();
  const double c1 = p.c1();
  const double c2 = p.c2();
  double total = 0.0;
  std::size_t count = 0;
  for (int y0 = 0; y0 + kWindow <= f.height(); ++y0) {
    for (int x0 = 0; x0 + kWindow <= f.width(); ++x0) {
      double mf = 0.0, mg = 0.0, ff = 0.0, gg = 0.0, fg = 0.0;
      for (int y = 0; y < kWindow; ++y) {
        for (int x = 0; x < kWindow; ++x) {
          const double wt = w[static_cast<std::size_t>(y * kWindow + x)];
          const double a = f(x0 + x, y0 + y);
          const double b = g(x0 + x, y0 + y);
          mf += wt * a;
          mg += wt * b;
          ff += wt * a * a;
          gg += wt * b * b;
          fg += wt * a * b;
        }
      }
      total += ssim_formula(mf, mg, ff - mf * mf, gg - mg * mg, fg - mf * mg, c1, c2);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

double ber(std::span<const std::uint8_t> reference, std::span<const std::uint8_t> received) {
  if (reference.size() != received.size()) {
    throw DimensionError("bitstreams differ in length: " + std::to_string(reference.size()) +
                         " vs " + std::to_string(received.size()));
  }
  if (reference.empty()) return 0.0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) errors += (reference[i] != received[i]);
  return static_cast<double>(errors) / static_cast<double>(reference.size());
}

double mse(const GrayImage& f, const GrayImage& g) {
  require_same_shape(f, g);
  const auto a = f.pixels();
  const auto b = g.pixels();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(const GrayImage& f, const GrayImage& g, double max_value) {
  if (!(max_value > 0.0)) throw ConfigError("PSNR peak value must be positive");
  const double e = mse(f, g);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / e);
}

void SsimParams::validate() const {
  if (!(k1 > 0.0 && k1 < 0.1) || !(k2 > 0.0 && k2 < 0.1)) {
    throw ConfigError("SSIM constants K1, K2 must lie in (0, 0.1)");
  }
  if (!(l > 0.0)) throw ConfigError("SSIM dynamic range must be positive");
}

double ssim(const GrayImage& f, const GrayImage& g, const SsimParams& params) {
  params.validate();
  require_same_shape(f, g);
  switch (params.window) {
    case SsimWindow::global: return ssim_global(f, g, params);
    case SsimWindow::gaussian_11x11: return ssim_windowed(f, g, params);
  }
  throw ConfigError("unknown SSIM window");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::decoded: return "decoded";
    case Stage::median: return "median";
    case Stage::gaussian: return "gaussian";
    case Stage::bm3d: return "bm3d";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (auto s : {Stage::decoded, Stage::median, Stage::gaussian, Stage::bm3d}) {
    if (name == to_string(s)) return s;
  }
  throw FormatError("unknown stage '" + std::string(name) + "'");
}

MetricsReport evaluate(const GrayImage& truth, const GrayImage& test, double snr_db, Stage stage,
                       const SsimParams& params) {
  require_same_shape(truth, test);
  MetricsReport r;
  const auto a = truth.pixels();
  const auto b = test.pixels();
  std::size_t errors = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    errors += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
  }
  r.ber = static_cast<double>(errors) / (8.0 * static_cast<double>(a.size()));
  r.psnr_db = psnr(truth, test);
  r.ssim = ssim(truth, test, params);
  r.snr_db = snr_db;
  r.stage = stage;
  return r;
}

}  // namespace semlink
