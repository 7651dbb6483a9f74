#include "semlink/modem.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "semlink/error.hpp"

namespace semlink {

BitStream image_to_bits(const GrayImage& img) {
  BitStream bits;
  bits.reserve(img.size() * 8);
  for (const std::uint8_t px : img.pixels()) {
    for (int b = 7; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((px >> b) & 1u));
  }
  return bits;
}

GrayImage bits_to_image(std::span<const std::uint8_t> bits, int width, int height) {
  if (width <= 0 || height <= 0) throw DimensionError("image dimensions must be positive");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bits.size() != 8 * n) {
    throw DimensionError("bitstream holds " + std::to_string(bits.size()) + " bits, a " +
                         std::to_string(width) + "x" + std::to_string(height) +
                         " image needs " + std::to_string(8 * n));
  }
  std::vector<std::uint8_t> px(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v = 0;
    for (int b = 0; b < 8; ++b) v = (v << 1) | (bits[8 * i + b] & 1u);
    px[i] = static_cast<std::uint8_t>(v);
  }
  return GrayImage(width, height, std::move(px));
}

namespace {

std::uint32_t reverse_bits(std::uint32_t v, int width) {
  std::uint32_t r = 0;
  for (int i = 0; i < width; ++i) {
    r = (r << 1) | (v & 1u);
    v >>= 1;
  }
  return r;
}

std::uint32_t gray_decode(std::uint32_t g) {
  std::uint32_t b = g;
  while (g >>= 1) b ^= g;
  return b;
}

}  // namespace

Constellation::Constellation(int order, GrayLabeling labeling) : order_(order), labeling_(labeling) {
  if (order < 4 || order > (1 << 20) || (order & (order - 1)) != 0) {
    throw ConfigError("constellation order must be a power of 4, got " + std::to_string(order));
  }
  bits_per_symbol_ = 0;
  while ((1 << bits_per_symbol_) < order) ++bits_per_symbol_;
  if (bits_per_symbol_ % 2 != 0) {
    throw ConfigError("constellation order must be a power of 4, got " + std::to_string(order));
  }
  const int axis_bits = bits_per_symbol_ / 2;
  side_ = 1 << axis_bits;

  // Unit average energy: E|p|^2 = 2 * scale^2 * (side^2 - 1) / 3.
  const double scale = std::sqrt(3.0 / (2.0 * (order - 1)));
  levels_.resize(static_cast<std::size_t>(side_));
  for (int i = 0; i < side_; ++i) levels_[i] = scale * (2 * i - (side_ - 1));

  axis_label_.resize(static_cast<std::size_t>(side_));
  axis_index_.resize(static_cast<std::size_t>(side_));
  for (std::uint32_t a = 0; a < static_cast<std::uint32_t>(side_); ++a) {
    const std::uint32_t gray =
        labeling == GrayLabeling::first_bit_fastest ? reverse_bits(a, axis_bits) : a;
    const auto index = static_cast<int>(gray_decode(gray));
    axis_index_[a] = index;
    axis_label_[static_cast<std::size_t>(index)] = a;
  }

  points_.resize(static_cast<std::size_t>(order));
  for (std::uint32_t label = 0; label < static_cast<std::uint32_t>(order); ++label) {
    const auto [col, row] = grid_position(label);
    points_[label] = Complex(levels_[col], levels_[row]);
  }
}

std::pair<int, int> Constellation::grid_position(std::uint32_t label) const {
  const int axis_bits = bits_per_symbol_ / 2;
  const std::uint32_t mask = (1u << axis_bits) - 1;
  return {axis_index_[(label >> axis_bits) & mask], axis_index_[label & mask]};
}

std::uint32_t Constellation::label_at(int column, int row) const {
  return (axis_label_[column] << (bits_per_symbol_ / 2)) | axis_label_[row];
}

int Constellation::axis_candidates(double v, int out[2]) const {
  const double step = spacing();
  const double t = (v - levels_.front()) / step;
  int lo = static_cast<int>(std::floor(t));
  if (!(t == t)) lo = 0;  // NaN
  if (lo < 0) {
    out[0] = 0;
    return 1;
  }
  if (lo >= side_ - 1) {
    out[0] = side_ - 1;
    return 1;
  }
  const double d_lo = std::abs(v - levels_[lo]);
  const double d_hi = std::abs(v - levels_[lo + 1]);
  if (d_lo < d_hi) {
    out[0] = lo;
    return 1;
  }
  if (d_hi < d_lo) {
    out[0] = lo + 1;
    return 1;
  }
  out[0] = lo;
  out[1] = lo + 1;
  return 2;
}

std::uint32_t Constellation::nearest_label(Complex z) const {
  int cols[2];
  int rows[2];
  const int nc = axis_candidates(z.real(), cols);
  const int nr = axis_candidates(z.imag(), rows);
  std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
  for (int i = 0; i < nc; ++i) {
    for (int j = 0; j < nr; ++j) best = std::min(best, label_at(cols[i], rows[j]));
  }
  return best;
}

ModulatedStream modulate(std::span<const std::uint8_t> bits, const Constellation& c, int k) {
  if (k <= 0) throw ConfigError("antenna count must be positive, got " + std::to_string(k));
  const auto b = static_cast<std::size_t>(c.bits_per_symbol());
  const std::size_t uk = static_cast<std::size_t>(k);
  const std::size_t symbols = (bits.size() + b - 1) / b;
  const std::size_t frames = (symbols + uk - 1) / uk;

  ModulatedStream out;
  out.frames.resize(k, static_cast<Eigen::Index>(frames));
  out.padding_bits = frames * uk * b - bits.size();
  for (std::size_t s = 0; s < frames * uk; ++s) {
    std::uint32_t label = 0;
    for (std::size_t j = 0; j < b; ++j) {
      const std::size_t idx = s * b + j;
      label = (label << 1) | (idx < bits.size() ? (bits[idx] & 1u) : 0u);
    }
    out.frames(static_cast<Eigen::Index>(s % uk), static_cast<Eigen::Index>(s / uk)) =
        c.point(label);
  }
  return out;
}

BitStream demodulate(const Eigen::MatrixXcd& estimates, const Constellation& c,
                     std::size_t padding_bits) {
  const auto b = c.bits_per_symbol();
  const std::size_t total = static_cast<std::size_t>(estimates.size()) * static_cast<std::size_t>(b);
  if (padding_bits > total) {
    throw DimensionError("padding of " + std::to_string(padding_bits) + " bits exceeds the " +
                         std::to_string(total) + " demodulated bits");
  }
  BitStream bits;
  bits.reserve(total);
  for (Eigen::Index z = 0; z < estimates.cols(); ++z) {
    for (Eigen::Index i = 0; i < estimates.rows(); ++i) {
      const std::uint32_t label = c.nearest_label(estimates(i, z));
      for (int j = b - 1; j >= 0; --j) bits.push_back(static_cast<std::uint8_t>((label >> j) & 1u));
    }
  }
  bits.resize(total - padding_bits);
  return bits;
}

}  // namespace semlink
