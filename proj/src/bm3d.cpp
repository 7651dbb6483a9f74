#include "semlink/bm3d.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "semlink/error.hpp"

namespace semlink {

void Bm3dProfile::validate() const {
  auto pow2 = [](int n) { return n >= 1 && (n & (n - 1)) == 0; };
  if (block_size < 2) throw ConfigError("bm3d block size must be >= 2");
  if (search_window < 1 || search_window % 2 == 0) {
    throw ConfigError("bm3d search window must be odd");
  }
  if (step < 1) throw ConfigError("bm3d step must be >= 1");
  if (!pow2(max_group_hard) || !pow2(max_group_wiener)) {
    throw ConfigError("bm3d group sizes must be powers of two");
  }
  if (!(lambda3d > 0.0) || !(kaiser_beta >= 0.0)) throw ConfigError("invalid bm3d threshold");
}

namespace bm3d_detail {

Aggregator::Aggregator(int width, int height)
    : width_(width),
      height_(height),
      numerator_(static_cast<std::size_t>(width) * height, 0.0),
      weights_(static_cast<std::size_t>(width) * height, 0.0) {}

void Aggregator::add(int x0, int y0, int size, std::span<const double> block,
                     std::span<const double> window, double weight) {
  for (int y = 0; y < size; ++y) {
    const std::size_t row = static_cast<std::size_t>(y0 + y) * width_ + x0;
    for (int x = 0; x < size; ++x) {
      const std::size_t b = static_cast<std::size_t>(y * size + x);
      const double w = weight * window[b];
      numerator_[row + x] += w * block[b];
      weights_[row + x] += w;
    }
  }
}

std::vector<double> Aggregator::normalized() const {
  std::vector<double> out(numerator_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(weights_[i] > 0.0)) throw DimensionError("bm3d left a pixel without estimate");
    out[i] = numerator_[i] / weights_[i];
  }
  return out;
}

std::vector<double> dct_basis(int n) {
  std::vector<double> c(static_cast<std::size_t>(n * n));
  for (int k = 0; k < n; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int i = 0; i < n; ++i) {
      c[static_cast<std::size_t>(k * n + i)] =
          scale * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
    }
  }
  return c;
}

void haar_forward(std::span<double> v) {
  std::vector<double> tmp(v.size());
  for (std::size_t len = v.size(); len > 1; len /= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      tmp[i] = (v[2 * i] + v[2 * i + 1]) * std::numbers::sqrt2 / 2.0;
      tmp[half + i] = (v[2 * i] - v[2 * i + 1]) * std::numbers::sqrt2 / 2.0;
    }
    std::copy_n(tmp.begin(), len, v.begin());
  }
}

void haar_inverse(std::span<double> v) {
  std::vector<double> tmp(v.size());
  for (std::size_t len = 2; len <= v.size(); len *= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      tmp[2 * i] = (v[i] + v[half + i]) * std::numbers::sqrt2 / 2.0;
      tmp[2 * i + 1] = (v[i] - v[half + i]) * std::numbers::sqrt2 / 2.0;
    }
    std::copy_n(tmp.begin(), len, v.begin());
  }
}

std::vector<double> kaiser_window(int n, double beta) {
  std::vector<double> w1(static_cast<std::size_t>(n));
  const double norm = std::cyl_bessel_i(0.0, beta);
  for (int i = 0; i < n; ++i) {
    const double r = n == 1 ? 0.0 : 2.0 * i / (n - 1) - 1.0;
    w1[static_cast<std::size_t>(i)] = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / norm;
  }
  std::vector<double> w(static_cast<std::size_t>(n * n));
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      w[static_cast<std::size_t>(y * n + x)] = w1[static_cast<std::size_t>(y)] * w1[static_cast<std::size_t>(x)];
    }
  }
  return w;
}

}  // namespace bm3d_detail

namespace {

using bm3d_detail::Aggregator;

struct Match {
  double distance;
  int x;
  int y;
};

// Reference positions along one axis: 0, step, 2 step, ... and always the last.
std::vector<int> reference_positions(int extent, int block, int step) {
  std::vector<int> pos;
  const int last = extent - block;
  for (int p = 0; p < last; p += step) pos.push_back(p);
  pos.push_back(last);
  return pos;
}

class Bm3dRunner {
 public:
  Bm3dRunner(const GrayImage& img, double sigma, const Bm3dProfile& profile)
      : p_(profile),
        sigma_(sigma),
        width_(img.width()),
        height_(img.height()),
        n_(profile.block_size),
        area_(static_cast<std::size_t>(n_ * n_)),
        dct_(bm3d_detail::dct_basis(n_)),
        kaiser_(bm3d_detail::kaiser_window(n_, profile.kaiser_beta)),
        noisy_(img.size()) {
    for (std::size_t i = 0; i < img.size(); ++i) noisy_[i] = img.pixels()[i];
    xs_ = reference_positions(width_, n_, p_.step);
    ys_ = reference_positions(height_, n_, p_.step);
  }

  std::vector<double> basic() {
    const double tau = sigma_ > p_.high_noise_above ? p_.match_hard_high_noise : p_.match_hard;
    Aggregator agg(width_, height_);
    std::vector<Match> matches;
    std::vector<double> group;
    const std::vector<double> spectra = block_spectra(noisy_);
    for_each_group(noisy_, tau, p_.max_group_hard, matches, [&](int, int) {
        load_group(spectra, matches, group);
        const std::size_t count = matches.size();
        const double threshold = p_.lambda3d * sigma_;
        std::size_t retained = 0;
        for (double& c : group) {
          if (std::abs(c) <= threshold) {
            c = 0.0;
          } else {
            ++retained;
          }
        }
        const double weight = retained > 0 ? 1.0 / (sigma_ * sigma_ * static_cast<double>(retained)) : 1.0;
        store_group(group, matches, count, weight, agg);
    });
    return agg.normalized();
  }

  std::vector<double> wiener(const std::vector<double>& pilot) {
    const double tau = sigma_ > p_.high_noise_above ? p_.match_wiener_high_noise : p_.match_wiener;
    Aggregator agg(width_, height_);
    std::vector<Match> matches;
    std::vector<double> noisy_group;
    std::vector<double> pilot_group;
    const double s2 = sigma_ * sigma_;
    const std::vector<double> noisy_spectra = block_spectra(noisy_);
    const std::vector<double> pilot_spectra = block_spectra(pilot);
    for_each_group(pilot, tau, p_.max_group_wiener, matches, [&](int, int) {
        load_group(pilot_spectra, matches, pilot_group);
        load_group(noisy_spectra, matches, noisy_group);
        double energy = 0.0;
        for (std::size_t i = 0; i < noisy_group.size(); ++i) {
          const double b2 = pilot_group[i] * pilot_group[i];
          const double shrink = b2 / (b2 + s2);
          noisy_group[i] *= shrink;
          energy += shrink * shrink;
        }
        const double weight = energy > 0.0 ? 1.0 / (s2 * energy) : 1.0;
        store_group(noisy_group, matches, matches.size(), weight, agg);
    });
    return agg.normalized();
  }

 private:
  // Visits every reference position in raster order with `out` holding its
  // group: blocks within the search window whose squared distance to the
  // reference is at most tau * area, closest first (scan order on ties),
  // truncated to the largest power of two not above max_group. The reference
  // itself is always first.
  //
  // Distances come from one integral image of squared differences per
  // displacement, computed over a strip of reference rows at a time.
  template <typename Visit>
  void for_each_group(const std::vector<double>& img, double tau, int max_group,
                      std::vector<Match>& out, Visit&& visit) const {
    const int half = p_.search_window / 2;
    const int side = 2 * half + 1;
    const std::size_t n_disp = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
    const std::size_t n_cols = xs_.size();
    const double limit = tau * static_cast<double>(area_);
    constexpr std::size_t kStripRows = 16;
    const std::size_t w1 = static_cast<std::size_t>(width_) + 1;

    std::vector<double> dist;
    std::vector<double> integral;
    for (std::size_t r0 = 0; r0 < ys_.size(); r0 += kStripRows) {
      const std::size_t r1 = std::min(ys_.size(), r0 + kStripRows);
      const int ya = ys_[r0];
      const int band = ys_[r1 - 1] + n_ - ya;
      const std::size_t refs = (r1 - r0) * n_cols;
      dist.assign(refs * n_disp, std::numeric_limits<double>::infinity());
      integral.assign(static_cast<std::size_t>(band + 1) * w1, 0.0);

      for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
          const std::size_t d_idx = static_cast<std::size_t>(dy + half) * side + static_cast<std::size_t>(dx + half);
          // integral[(y + 1) * w1 + (x + 1)] = sum of squared differences over
          // band rows [0, y] and columns [0, x]; 0 where the partner is outside.
          for (int y = 0; y < band; ++y) {
            const int iy = ya + y;
            const int jy = iy + dy;
            double row = 0.0;
            double* cur = integral.data() + static_cast<std::size_t>(y + 1) * w1;
            const double* prev = cur - w1;
            const bool row_ok = jy >= 0 && jy < height_;
            const double* a = img.data() + static_cast<std::size_t>(iy) * width_;
            const double* b = row_ok ? img.data() + static_cast<std::size_t>(jy) * width_ : nullptr;
            for (int x = 0; x < width_; ++x) {
              const int jx = x + dx;
              if (row_ok && jx >= 0 && jx < width_) {
                const double diff = a[x] - b[jx];
                row += diff * diff;
              }
              cur[x + 1] = prev[x + 1] + row;
            }
          }
          for (std::size_t r = r0; r < r1; ++r) {
            const int ry = ys_[r];
            const int cy = ry + dy;
            if (cy < 0 || cy > height_ - n_) continue;
            const std::size_t top = static_cast<std::size_t>(ry - ya) * w1;
            const std::size_t bottom = static_cast<std::size_t>(ry - ya + n_) * w1;
            for (std::size_t c = 0; c < n_cols; ++c) {
              const int rx = xs_[c];
              const int cx = rx + dx;
              if (cx < 0 || cx > width_ - n_) continue;
              const std::size_t l = static_cast<std::size_t>(rx);
              const std::size_t rr = l + static_cast<std::size_t>(n_);
              const double d = integral[bottom + rr] - integral[bottom + l] - integral[top + rr] + integral[top + l];
              dist[((r - r0) * n_cols + c) * n_disp + d_idx] = std::max(0.0, d);
            }
          }
        }
      }

      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = 0; c < n_cols; ++c) {
          const int rx = xs_[c];
          const int ry = ys_[r];
          const double* d = dist.data() + ((r - r0) * n_cols + c) * n_disp;
          out.clear();
          out.push_back({0.0, rx, ry});
          for (int dy = -half; dy <= half; ++dy) {
            for (int dx = -half; dx <= half; ++dx) {
              if (dx == 0 && dy == 0) continue;
              const double v = d[static_cast<std::size_t>(dy + half) * side + static_cast<std::size_t>(dx + half)];
              if (v <= limit) out.push_back({v, rx + dx, ry + dy});
            }
          }
          std::size_t keep = 1;
          while (keep * 2 <= out.size() && keep * 2 <= static_cast<std::size_t>(max_group)) keep *= 2;
          std::partial_sort(out.begin() + 1, out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(),
                            [](const Match& a, const Match& b) {
                              if (a.distance != b.distance) return a.distance < b.distance;
                              return a.y != b.y ? a.y < b.y : a.x < b.x;
                            });
          out.resize(keep);
          visit(rx, ry);
        }
      }
    }
  }

  // 2-D DCT of the block at every position, layout [(y * cols + x) * area + coef].
  std::vector<double> block_spectra(const std::vector<double>& img) const {
    const int cols = width_ - n_ + 1;
    const int rows = height_ - n_ + 1;
    std::vector<double> out(static_cast<std::size_t>(cols) * static_cast<std::size_t>(rows) * area_);
    std::vector<double> block(area_);
    std::vector<double> tmp(area_);
    for (int by = 0; by < rows; ++by) {
      for (int bx = 0; bx < cols; ++bx) {
        for (int y = 0; y < n_; ++y) {
          const double* src = img.data() + static_cast<std::size_t>(by + y) * width_ + bx;
          std::copy_n(src, n_, block.begin() + static_cast<std::ptrdiff_t>(y * n_));
        }
        dct2(block, tmp, false);
        std::copy(block.begin(), block.end(),
                  out.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(by) * cols + bx) * area_));
      }
    }
    return out;
  }

  // Spectra of the matched blocks, then Haar along the group for each
  // coefficient. Layout: group[coef * count + member].
  void load_group(const std::vector<double>& spectra, const std::vector<Match>& matches,
                  std::vector<double>& group) const {
    const std::size_t count = matches.size();
    const std::size_t cols = static_cast<std::size_t>(width_ - n_ + 1);
    group.assign(area_ * count, 0.0);
    for (std::size_t m = 0; m < count; ++m) {
      const double* src = spectra.data() +
                          (static_cast<std::size_t>(matches[m].y) * cols + static_cast<std::size_t>(matches[m].x)) * area_;
      for (std::size_t c = 0; c < area_; ++c) group[c * count + m] = src[c];
    }
    if (count > 1) {
      for (std::size_t c = 0; c < area_; ++c) {
        bm3d_detail::haar_forward(std::span<double>(group.data() + c * count, count));
      }
    }
  }

  void store_group(std::vector<double>& group, const std::vector<Match>& matches,
                   std::size_t count, double weight, Aggregator& agg) const {
    if (count > 1) {
      for (std::size_t c = 0; c < area_; ++c) {
        bm3d_detail::haar_inverse(std::span<double>(group.data() + c * count, count));
      }
    }
    std::vector<double> block(area_);
    std::vector<double> tmp(area_);
    for (std::size_t m = 0; m < count; ++m) {
      for (std::size_t c = 0; c < area_; ++c) block[c] = group[c * count + m];
      dct2(block, tmp, true);
      agg.add(matches[m].x, matches[m].y, n_, block, kaiser_, weight);
    }
  }

  // Separable orthonormal 2-D DCT (or its inverse) in place: C B C^T.
  void dct2(std::vector<double>& block, std::vector<double>& tmp, bool inverse) const {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajor> b(block.data(), n_, n_);
    Eigen::Map<RowMajor> t(tmp.data(), n_, n_);
    const Eigen::Map<const RowMajor> c(dct_.data(), n_, n_);
    if (inverse) {
      t.noalias() = c.transpose() * b;
      b.noalias() = t * c;
    } else {
      t.noalias() = c * b;
      b.noalias() = t * c.transpose();
    }
  }

  const Bm3dProfile& p_;
  double sigma_;
  int width_;
  int height_;
  int n_;
  std::size_t area_;
  std::vector<double> dct_;
  std::vector<double> kaiser_;
  std::vector<double> noisy_;
  std::vector<int> xs_;
  std::vector<int> ys_;
};

}  // namespace

std::vector<double> bm3d_estimate(const GrayImage& img, double noise_level,
                                  const Bm3dProfile& profile, bool basic_only) {
  profile.validate();
  if (!(noise_level > 0.0) || !std::isfinite(noise_level)) {
    throw ConfigError("bm3d noise level must be positive and finite");
  }
  if (img.width() < profile.block_size || img.height() < profile.block_size) {
    throw DimensionError("bm3d needs an image of at least " + std::to_string(profile.block_size) +
                         "x" + std::to_string(profile.block_size) + " pixels, got " +
                         std::to_string(img.width()) + "x" + std::to_string(img.height()));
  }
  Bm3dRunner runner(img, noise_level, profile);
  std::vector<double> basic = runner.basic();
  if (basic_only) return basic;
  return runner.wiener(basic);
}

GrayImage bm3d_filter(const GrayImage& img, double noise_level, const Bm3dProfile& profile) {
  return quantize(img.width(), img.height(), bm3d_estimate(img, noise_level, profile));
}

}  // namespace semlink
