#include "semlink/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "semlink/error.hpp"

namespace semlink {

std::string_view to_string(DetectorVariant v) {
  switch (v) {
    case DetectorVariant::admm: return "admm";
    case DetectorVariant::zf: return "zf";
    case DetectorVariant::mmse: return "mmse";
    case DetectorVariant::ml: return "ml";
  }
  return "?";
}

DetectorVariant parse_detector_variant(std::string_view name) {
  for (auto v : {DetectorVariant::admm, DetectorVariant::zf, DetectorVariant::mmse,
                 DetectorVariant::ml}) {
    if (name == to_string(v)) return v;
  }
  throw ConfigError("unknown detector variant '" + std::string(name) + "'");
}

void DetectorConfig::validate() const {
  if (!(penalty > 0.0)) throw ConfigError("ADMM penalty must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
}

double residual_norm2(const Eigen::VectorXcd& y, const ChannelRealization& ch,
                      const Eigen::VectorXcd& x) {
  return (y - std::sqrt(ch.rho) * (ch.h * x)).squaredNorm();
}

namespace {

double ml_hypotheses(const Constellation& c, int k) {
  return std::pow(static_cast<double>(c.order()), k);
}

Eigen::VectorXcd project_box(const Eigen::VectorXcd& v, double a) {
  Eigen::VectorXcd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[i] = Complex(std::clamp(v[i].real(), -a, a), std::clamp(v[i].imag(), -a, a));
  }
  return out;
}

}  // namespace

BlockDetector::BlockDetector(const ChannelRealization& ch, const Constellation& c,
                             DetectorConfig cfg)
    : ch_(ch), constellation_(&c), cfg_(cfg) {
  ch_.validate();
  cfg_.validate();
  const int k = ch_.k();
  scaled_h_ = std::sqrt(ch_.rho) * ch_.h;
  gram_ = scaled_h_.adjoint() * scaled_h_;
  const Eigen::MatrixXcd& gram = gram_;
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(k, k);

  switch (cfg_.variant) {
    case DetectorVariant::ml:
      if (ml_hypotheses(c, k) > kMaxMlHypotheses) {
        throw SearchSpaceError("exhaustive ML over " + std::to_string(c.order()) + "^" +
                               std::to_string(k) + " hypotheses exceeds the 1e6 limit");
      }
      break;
    case DetectorVariant::zf: {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(scaled_h_);
      if (qr.rank() < k) {
        throw NumericalRankError("channel matrix has numerical rank " + std::to_string(qr.rank()) +
                                 " < K=" + std::to_string(k));
      }
      zf_filter_ = qr.solve(Eigen::MatrixXcd::Identity(ch_.m(), ch_.m()));
      break;
    }
    case DetectorVariant::mmse:
    case DetectorVariant::admm: {
      const Eigen::MatrixXcd regularized = gram + ch_.sigma2 * eye;
      Eigen::LLT<Eigen::MatrixXcd> llt(regularized);
      if (llt.info() == Eigen::Success) {
        mmse_filter_ = llt.solve(scaled_h_.adjoint());
      } else {
        // sigma2 = 0 with a rank-deficient channel: minimum-norm solution.
        mmse_filter_ = regularized.completeOrthogonalDecomposition().pseudoInverse() *
                       scaled_h_.adjoint();
      }
      if (cfg_.variant == DetectorVariant::admm) {
        Eigen::LLT<Eigen::MatrixXcd> normal(gram + cfg_.penalty * eye);
        // gamma > 0 makes the system positive definite.
        if (normal.info() != Eigen::Success) {
          throw NumericalRankError("ADMM normal equations are singular");
        }
        admm_inverse_ = normal.solve(eye);
      }
      break;
    }
  }
}

DetectionResult BlockDetector::detect(const Eigen::VectorXcd& y) const {
  if (y.size() != ch_.h.rows()) {
    throw DimensionError("received frame has " + std::to_string(y.size()) +
                         " entries, channel has M=" + std::to_string(ch_.m()));
  }
  switch (cfg_.variant) {
    case DetectorVariant::admm: return admm(y);
    case DetectorVariant::zf: return linear(zf_filter_, y);
    case DetectorVariant::mmse: return linear(mmse_filter_, y);
    case DetectorVariant::ml: return ml(y);
  }
  throw ConfigError("unknown detector variant");
}

void BlockDetector::quantize(DetectionResult& r) const {
  const auto k = r.estimates.size();
  r.hard_symbols.resize(k);
  r.labels.resize(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const std::uint32_t label = constellation_->nearest_label(r.estimates[i]);
    r.labels[static_cast<std::size_t>(i)] = label;
    r.hard_symbols[i] = constellation_->point(label);
  }
}

DetectionResult BlockDetector::linear(const Eigen::MatrixXcd& filter,
                                      const Eigen::VectorXcd& y) const {
  DetectionResult r;
  r.estimates = filter * y;
  quantize(r);
  return r;
}

DetectionResult BlockDetector::admm(const Eigen::VectorXcd& y) const {
  const double a = constellation_->max_amplitude();
  const double gamma = cfg_.penalty;
  const Eigen::VectorXcd matched = scaled_h_.adjoint() * y;

  Eigen::VectorXcd x = mmse_filter_ * y;
  Eigen::VectorXcd z = project_box(x, a);
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(x.size());

  DetectionResult r;
  r.converged = false;
  for (int it = 1; it <= cfg_.max_iters; ++it) {
    x = admm_inverse_ * (matched + gamma * (z - u));
    z = project_box(x + u, a);
    u += x - z;
    r.iterations_used = it;
    if ((x - z).norm() < cfg_.tolerance) {
      r.converged = true;
      break;
    }
  }
  r.estimates = z;
  quantize(r);
  if (cfg_.local_search) descend(y, r);
  return r;
}

void BlockDetector::descend(const Eigen::VectorXcd& y, DetectionResult& r) const {
  // Moving entry i by delta changes the cost by
  //   -2 Re(conj(delta) * corr_i) + |delta|^2 * G_ii,  corr = A^H (y - A x),
  // with A = sqrt(rho) H and G = A^H A, so a pass costs O(K^2) per move.
  const auto k = r.hard_symbols.size();
  Eigen::VectorXcd corr = scaled_h_.adjoint() * (y - scaled_h_ * r.hard_symbols);
  const int side = constellation_->side();
  bool improved = true;
  for (int pass = 0; improved && pass < 4 * constellation_->order(); ++pass) {
    improved = false;
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto [col, row] = constellation_->grid_position(r.labels[static_cast<std::size_t>(i)]);
      const double g = gram_(i, i).real();
      double best_gain = 0.0;
      std::uint32_t best_label = r.labels[static_cast<std::size_t>(i)];
      for (int dc = -1; dc <= 1; ++dc) {
        for (int dr = -1; dr <= 1; ++dr) {
          const int c2 = col + dc;
          const int r2 = row + dr;
          if ((dc == 0 && dr == 0) || c2 < 0 || r2 < 0 || c2 >= side || r2 >= side) continue;
          const std::uint32_t label = constellation_->label_at(c2, r2);
          const Complex delta = constellation_->point(label) - r.hard_symbols[i];
          const double gain = 2.0 * (std::conj(delta) * corr[i]).real() - std::norm(delta) * g;
          if (gain > best_gain) {
            best_gain = gain;
            best_label = label;
          }
        }
      }
      if (best_label != r.labels[static_cast<std::size_t>(i)]) {
        const Complex delta = constellation_->point(best_label) - r.hard_symbols[i];
        corr -= gram_.col(i) * delta;
        r.hard_symbols[i] = constellation_->point(best_label);
        r.labels[static_cast<std::size_t>(i)] = best_label;
        improved = true;
      }
    }
  }
}

DetectionResult BlockDetector::ml(const Eigen::VectorXcd& y) const {
  const int k = ch_.k();
  const int q = constellation_->order();
  const auto points = constellation_->points();

  std::vector<std::uint32_t> labels(static_cast<std::size_t>(k), 0);
  std::vector<std::uint32_t> best_labels = labels;
  Eigen::VectorXcd x(k);
  double best = std::numeric_limits<double>::infinity();
  // Odometer over all Q^K label vectors in lexicographic order; strict '<'
  // keeps the first minimiser.
  while (true) {
    for (int i = 0; i < k; ++i) x[i] = points[labels[static_cast<std::size_t>(i)]];
    const double cost = (y - scaled_h_ * x).squaredNorm();
    if (cost < best) {
      best = cost;
      best_labels = labels;
    }
    int pos = k - 1;
    while (pos >= 0 && ++labels[static_cast<std::size_t>(pos)] == static_cast<std::uint32_t>(q)) {
      labels[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }

  DetectionResult r;
  r.estimates.resize(k);
  r.hard_symbols.resize(k);
  r.labels = best_labels;
  for (int i = 0; i < k; ++i) {
    r.hard_symbols[i] = points[best_labels[static_cast<std::size_t>(i)]];
    r.estimates[i] = r.hard_symbols[i];
  }
  return r;
}

namespace {

DetectionResult run_variant(DetectorVariant v, const ReceivedFrame& y,
                            const ChannelRealization& ch, const Constellation& c,
                            DetectorConfig cfg) {
  cfg.variant = v;
  return BlockDetector(ch, c, cfg).detect(y.y);
}

}  // namespace

DetectionResult detect_admm(const ReceivedFrame& y, const ChannelRealization& ch,
                            const Constellation& c, const DetectorConfig& cfg) {
  if (cfg.variant != DetectorVariant::admm) {
    throw ConfigError("detect_admm called with variant " + std::string(to_string(cfg.variant)));
  }
  return BlockDetector(ch, c, cfg).detect(y.y);
}

DetectionResult detect_zf(const ReceivedFrame& y, const ChannelRealization& ch,
                          const Constellation& c) {
  return run_variant(DetectorVariant::zf, y, ch, c, {});
}

DetectionResult detect_mmse(const ReceivedFrame& y, const ChannelRealization& ch,
                            const Constellation& c) {
  return run_variant(DetectorVariant::mmse, y, ch, c, {});
}

DetectionResult detect_ml(const ReceivedFrame& y, const ChannelRealization& ch,
                          const Constellation& c) {
  return run_variant(DetectorVariant::ml, y, ch, c, {});
}

}  // namespace semlink
