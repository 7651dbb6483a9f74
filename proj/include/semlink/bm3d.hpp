#pragma once

#include <span>
#include <vector>

#include "semlink/image.hpp"

namespace semlink {

// Block-matching and 3-D filtering parameters. The defaults are the normal
// profile of the original BM3D method; the second set of match thresholds is
// used when the noise level exceeds `high_noise_above`.
struct Bm3dProfile {
  int block_size = 8;
  int search_window = 39;   // odd; candidates within +-(search_window / 2)
  int step = 3;             // reference block stride (the last row/column is always included)
  int max_group_hard = 16;  // powers of two
  int max_group_wiener = 32;
  double lambda3d = 2.7;    // hard threshold, in units of sigma
  double kaiser_beta = 2.0;

  // Normalised block distance ||a - b||^2 / block_size^2 thresholds.
  double match_hard = 2500.0;
  double match_wiener = 400.0;
  double high_noise_above = 40.0;
  double match_hard_high_noise = 5000.0;
  double match_wiener_high_noise = 3500.0;

  void validate() const;
};

// Two-stage BM3D. Stage one hard-thresholds the 3-D spectrum of groups matched
// on the noisy image; stage two regroups on the basic estimate and applies the
// empirical Wiener filter to the noisy groups. Quantized once at the end.
GrayImage bm3d_filter(const GrayImage& img, double noise_level, const Bm3dProfile& profile = {});

// Both stages without the final quantization. With `basic_only`, returns the
// stage-one estimate.
std::vector<double> bm3d_estimate(const GrayImage& img, double noise_level,
                                  const Bm3dProfile& profile = {}, bool basic_only = false);

namespace bm3d_detail {

// Weighted overlap-add of block estimates. normalized() divides the weighted
// sum at every pixel by the total weight that reached it, so each output
// pixel is a convex combination of the block values covering it.
class Aggregator {
 public:
  Aggregator(int width, int height);

  // `block` is size x size row-major, `window` likewise (per-pixel weight
  // multipliers); `weight` scales the whole block.
  void add(int x0, int y0, int size, std::span<const double> block, std::span<const double> window,
           double weight);

  std::vector<double> normalized() const;
  double weight_at(int x, int y) const {
    return weights_[static_cast<std::size_t>(y) * width_ + x];
  }

 private:
  int width_;
  int height_;
  std::vector<double> numerator_;
  std::vector<double> weights_;
};

// Orthonormal DCT-II basis, n x n row-major: basis[k * n + i].
std::vector<double> dct_basis(int n);
// Orthonormal Haar transform of a length-2^p sequence (in place) and its inverse.
void haar_forward(std::span<double> v);
void haar_inverse(std::span<double> v);
// n x n outer product of 1-D Kaiser windows.
std::vector<double> kaiser_window(int n, double beta);

}  // namespace bm3d_detail

}  // namespace semlink
