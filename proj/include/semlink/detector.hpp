#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

#include "semlink/channel.hpp"
#include "semlink/modem.hpp"

namespace semlink {

enum class DetectorVariant { admm, zf, mmse, ml };

std::string_view to_string(DetectorVariant v);
DetectorVariant parse_detector_variant(std::string_view name);

struct DetectorConfig {
  DetectorVariant variant = DetectorVariant::admm;
  double penalty = 1.0;     // ADMM penalty weight gamma
  int max_iters = 50;
  double tolerance = 1e-6;  // stop once ||x - z|| falls below this
  // After quantizing the ADMM output, move single entries to neighbouring grid
  // points while that strictly lowers ||y - sqrt(rho) H x||^2.
  bool local_search = false;

  void validate() const;
};

struct DetectionResult {
  Eigen::VectorXcd estimates;     // soft estimates before quantization
  Eigen::VectorXcd hard_symbols;  // nearest constellation points
  std::vector<std::uint32_t> labels;
  int iterations_used = 0;        // 0 for closed-form detectors
  bool converged = true;
};

// ||y - sqrt(rho) H x||^2
double residual_norm2(const Eigen::VectorXcd& y, const ChannelRealization& ch,
                      const Eigen::VectorXcd& x);

// Detector bound to one coherence block. All factorizations of H are computed
// at construction and never modified, so one instance may serve concurrent
// callers. The constellation must outlive the detector.
class BlockDetector {
 public:
  BlockDetector(const ChannelRealization& ch, const Constellation& c, DetectorConfig cfg = {});

  DetectionResult detect(const Eigen::VectorXcd& y) const;

  const DetectorConfig& config() const { return cfg_; }

 private:
  DetectionResult admm(const Eigen::VectorXcd& y) const;
  DetectionResult linear(const Eigen::MatrixXcd& filter, const Eigen::VectorXcd& y) const;
  DetectionResult ml(const Eigen::VectorXcd& y) const;
  void quantize(DetectionResult& r) const;
  void descend(const Eigen::VectorXcd& y, DetectionResult& r) const;

  ChannelRealization ch_;
  const Constellation* constellation_;
  DetectorConfig cfg_;
  Eigen::MatrixXcd scaled_h_;      // sqrt(rho) H
  Eigen::MatrixXcd mmse_filter_;   // (rho H^H H + sigma2 I)^-1 sqrt(rho) H^H
  Eigen::MatrixXcd zf_filter_;     // pseudoinverse of sqrt(rho) H
  Eigen::MatrixXcd admm_inverse_;  // (rho H^H H + gamma I)^-1
  Eigen::MatrixXcd gram_;          // rho H^H H
};

// Box-relaxed ADMM: x-update on the normal equations, z-update projecting onto
// the constellation hull, scaled dual u; warm start from the MMSE estimate.
// The quantized result is optionally polished by a coordinate-wise descent over
// neighbouring constellation points (DetectorConfig::local_search).
DetectionResult detect_admm(const ReceivedFrame& y, const ChannelRealization& ch,
                            const Constellation& c, const DetectorConfig& cfg = {});
// Throws NumericalRankError unless H has full column rank.
DetectionResult detect_zf(const ReceivedFrame& y, const ChannelRealization& ch,
                          const Constellation& c);
DetectionResult detect_mmse(const ReceivedFrame& y, const ChannelRealization& ch,
                            const Constellation& c);
// Exhaustive search; throws SearchSpaceError when Q^K exceeds kMaxMlHypotheses.
DetectionResult detect_ml(const ReceivedFrame& y, const ChannelRealization& ch,
                          const Constellation& c);

inline constexpr double kMaxMlHypotheses = 1e6;

}  // namespace semlink
