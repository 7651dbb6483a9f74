#include "semlink/channel.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "semlink/error.hpp"

namespace semlink {

void ChannelRealization::validate() const {
  if (k() < 1 || m() < k()) {
    throw ConfigError("channel needs M >= K >= 1, got M=" + std::to_string(m()) +
                      " K=" + std::to_string(k()));
  }
  if (!(rho > 0.0)) throw ConfigError("transmit power must be positive");
  if (!(sigma2 >= 0.0)) throw ConfigError("noise variance must be non-negative");
}

LinkPowers snr_to_powers(double snr_db) {
  if (std::isnan(snr_db)) throw RangeError("SNR is NaN");
  return {1.0, std::pow(10.0, -snr_db / 10.0)};
}

ChannelRealization sample_channel(int m, int k, std::uint64_t seed) {
  if (k < 1 || m < k) {
    throw ConfigError("channel needs M >= K >= 1, got M=" + std::to_string(m) +
                      " K=" + std::to_string(k));
  }
  ComplexGaussian draw(seed);
  ChannelRealization ch;
  ch.h.resize(m, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < m; ++i) ch.h(i, j) = draw(1.0);
  }
  return ch;
}

ReceivedFrame transmit(const Eigen::VectorXcd& frame, const ChannelRealization& ch,
                       std::uint64_t seed, std::size_t frame_index) {
  if (frame.size() != ch.h.cols()) {
    throw DimensionError("frame has " + std::to_string(frame.size()) +
                         " symbols, channel expects " + std::to_string(ch.h.cols()));
  }
  ComplexGaussian noise(seed);
  ReceivedFrame out;
  out.y = Eigen::MatrixXcd(transmit_block(frame, ch, noise)).col(0);
  out.frame_index = frame_index;
  return out;
}

Eigen::MatrixXcd transmit_block(const Eigen::MatrixXcd& frames, const ChannelRealization& ch,
                                ComplexGaussian& noise) {
  if (frames.rows() != ch.h.cols()) {
    throw DimensionError("frames have " + std::to_string(frames.rows()) +
                         " rows, channel expects " + std::to_string(ch.h.cols()));
  }
  Eigen::MatrixXcd y = std::sqrt(ch.rho) * (ch.h * frames);
  if (ch.sigma2 > 0.0) {
    for (Eigen::Index z = 0; z < y.cols(); ++z) {
      for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, z) += noise(ch.sigma2);
    }
  }
  return y;
}

}  // namespace semlink
