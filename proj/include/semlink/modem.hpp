#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "semlink/image.hpp"

namespace semlink {

using Complex = std::complex<double>;

// One bit per element, each element 0 or 1.
using BitStream = std::vector<std::uint8_t>;

// Row-major pixels, most significant bit first.
BitStream image_to_bits(const GrayImage& img);
GrayImage bits_to_image(std::span<const std::uint8_t> bits, int width, int height);

// Which end of a per-axis label nibble walks the reflected Gray code fastest.
//
// A square Q-QAM label of b bits is split into an in-phase half (the first
// b/2 bits in stream order) and a quadrature half. Each half selects one of
// sqrt(Q) amplitude levels through a reflected Gray code. With
// `first_bit_fastest` the first bit of each half is the Gray digit that flips
// between every pair of neighbouring levels, so the most significant pixel
// bits carry the most frequent single-bit errors. `first_bit_slowest` is the
// textbook arrangement where the first bit only flips across the axis origin.
// Both are Gray labelings: grid neighbours differ in exactly one bit.
enum class GrayLabeling { first_bit_fastest, first_bit_slowest };

// Gray-labeled square QAM with unit average symbol energy.
class Constellation {
 public:
  explicit Constellation(int order = 256, GrayLabeling labeling = GrayLabeling::first_bit_fastest);

  int order() const { return order_; }
  int bits_per_symbol() const { return bits_per_symbol_; }
  int side() const { return side_; }
  GrayLabeling labeling() const { return labeling_; }

  // Indexed by label.
  std::span<const Complex> points() const { return points_; }
  Complex point(std::uint32_t label) const { return points_[label]; }

  // Largest per-axis amplitude; the box [-a, a]^2 is the constellation hull.
  double max_amplitude() const { return levels_.back(); }
  // Distance between adjacent grid points.
  double spacing() const { return levels_[1] - levels_[0]; }

  // Grid position of a label: (column along I, row along Q), both in [0, side).
  std::pair<int, int> grid_position(std::uint32_t label) const;
  std::uint32_t label_at(int column, int row) const;

  // Label of the point nearest to z in Euclidean distance; ties go to the
  // lowest label.
  std::uint32_t nearest_label(Complex z) const;
  Complex nearest_point(Complex z) const { return points_[nearest_label(z)]; }

 private:
  // Candidate level indices (one, or two on an exact tie) nearest to v.
  int axis_candidates(double v, int out[2]) const;

  int order_;
  int bits_per_symbol_;
  int side_;
  GrayLabeling labeling_;
  std::vector<double> levels_;                    // ascending amplitudes
  std::vector<std::uint32_t> axis_label_;          // level index -> axis label
  std::vector<int> axis_index_;                    // axis label  -> level index
  std::vector<Complex> points_;
};

// Frames stacked as columns: column z is the K-vector sent in channel use z.
struct ModulatedStream {
  Eigen::MatrixXcd frames;
  // Zero bits appended to complete the last symbol and the last frame.
  std::size_t padding_bits = 0;

  Eigen::Index frame_count() const { return frames.cols(); }
};

// Groups bits_per_symbol bits into labels (first bit most significant) and
// fills frames of k symbols in order; the tail is zero-padded.
ModulatedStream modulate(std::span<const std::uint8_t> bits, const Constellation& c, int k);

// Nearest-point demapping of every entry, column by column, then strips
// `padding_bits` from the end.
BitStream demodulate(const Eigen::MatrixXcd& estimates, const Constellation& c,
                     std::size_t padding_bits = 0);

}  // namespace semlink
