#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "semlink/random.hpp"

namespace semlink {

// One coherence block of y = sqrt(rho) * H * x + n.
struct ChannelRealization {
  Eigen::MatrixXcd h;   // M x K, entries CN(0, 1)
  double rho = 1.0;     // transmit power per symbol
  double sigma2 = 0.0;  // receiver noise variance

  int m() const { return static_cast<int>(h.rows()); }
  int k() const { return static_cast<int>(h.cols()); }
  double snr() const { return rho / sigma2; }
  // Throws ConfigError unless M >= K >= 1, rho > 0, sigma2 >= 0.
  void validate() const;
};

struct ReceivedFrame {
  Eigen::VectorXcd y;
  std::size_t frame_index = 0;
};

struct LinkPowers {
  double rho;
  double sigma2;
};

// rho = 1, sigma2 = 10^(-snr_db / 10). +inf maps to a noiseless link.
LinkPowers snr_to_powers(double snr_db);

// I.i.d. Rayleigh channel; rho = 1 and sigma2 = 0 until set by the caller.
ChannelRealization sample_channel(int m, int k, std::uint64_t seed);

// Noise for one frame is drawn from `seed` alone.
ReceivedFrame transmit(const Eigen::VectorXcd& frame, const ChannelRealization& ch,
                       std::uint64_t seed, std::size_t frame_index = 0);

// Passes every column of `frames` (K x Z) through the block, drawing noise
// sequentially from `noise`; returns M x Z.
Eigen::MatrixXcd transmit_block(const Eigen::MatrixXcd& frames, const ChannelRealization& ch,
                                ComplexGaussian& noise);

}  // namespace semlink
