#include <doctest.h>

#include <cmath>
#include <random>

#include "semlink/channel.hpp"
#include "semlink/detector.hpp"
#include "semlink/error.hpp"
#include "semlink/random.hpp"

using namespace semlink;

namespace {

Eigen::VectorXcd random_frame(const Constellation& c, int k, std::mt19937_64& rng) {
  Eigen::VectorXcd x(k);
  for (int i = 0; i < k; ++i) x(i) = c.point(static_cast<std::uint32_t>(rng() % c.order()));
  return x;
}

ChannelRealization make_channel(int m, int k, double snr_db, std::uint64_t seed) {
  ChannelRealization ch = sample_channel(m, k, seed);
  const auto p = snr_to_powers(snr_db);
  ch.rho = p.rho;
  ch.sigma2 = p.sigma2;
  return ch;
}

// Exhaustive minimiser of ||y - sqrt(rho) H x||^2, written independently of
// the library: recursion over entries, objective evaluated from scratch.
struct Oracle {
  double best = INFINITY;
  Eigen::VectorXcd arg;
};

void enumerate(const Eigen::VectorXcd& y, const ChannelRealization& ch, const Constellation& c,
               Eigen::VectorXcd& x, int i, Oracle& o) {
  if (i == x.size()) {
    double r = 0.0;
    for (int row = 0; row < ch.h.rows(); ++row) {
      Complex acc = y(row);
      for (int col = 0; col < x.size(); ++col) acc -= std::sqrt(ch.rho) * ch.h(row, col) * x(col);
      r += std::norm(acc);
    }
    if (r < o.best) {
      o.best = r;
      o.arg = x;
    }
    return;
  }
  for (const Complex p : c.points()) {
    x(i) = p;
    enumerate(y, ch, c, x, i + 1, o);
  }
}

Oracle brute_force(const Eigen::VectorXcd& y, const ChannelRealization& ch, const Constellation& c) {
  Oracle o;
  Eigen::VectorXcd x(ch.k());
  enumerate(y, ch, c, x, 0, o);
  return o;
}

bool members(const Eigen::VectorXcd& x, const Constellation& c) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (c.nearest_point(x(i)) != x(i)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("detector config") {
  DetectorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.penalty = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.tolerance = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_detector_variant("mmse") == DetectorVariant::mmse);
  CHECK_THROWS_AS(parse_detector_variant("sphere"), ConfigError);
}

TEST_CASE("noiseless identity channel") {
  const Constellation c(256);
  std::mt19937_64 rng(1);
  ChannelRealization eye;
  eye.h = Eigen::MatrixXcd::Identity(4, 4);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXcd x = random_frame(c, 4, rng);
    const ReceivedFrame y{x, 0};
    const auto a = detect_admm(y, eye, c);
    CHECK(a.hard_symbols == x);
    CHECK(a.converged);
    CHECK(detect_zf(y, eye, c).hard_symbols == x);
    CHECK(detect_mmse(y, eye, c).hard_symbols == x);
  }
}

TEST_CASE("noiseless Rayleigh channel") {
  const Constellation c(256);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    ChannelRealization ch = sample_channel(64, 4, static_cast<std::uint64_t>(t));
    const Eigen::VectorXcd x = random_frame(c, 4, rng);
    const ReceivedFrame y = transmit(x, ch, 0);
    const auto zf = detect_zf(y, ch, c);
    CHECK((zf.estimates - x).norm() < 1e-10);
    CHECK(zf.hard_symbols == x);
    CHECK((detect_mmse(y, ch, c).estimates - zf.estimates).norm() < 1e-9);
    CHECK(detect_admm(y, ch, c).hard_symbols == x);
  }
  const Constellation qpsk(4);
  for (int t = 0; t < 20; ++t) {
    ChannelRealization ch = sample_channel(3, 3, 100 + static_cast<std::uint64_t>(t));
    const Eigen::VectorXcd x = random_frame(qpsk, 3, rng);
    CHECK(detect_ml(transmit(x, ch, 0), ch, qpsk).hard_symbols == x);
  }
}

TEST_CASE("zero forcing algebra") {
  const Constellation c(16);
  ChannelRealization eye;
  eye.h = Eigen::MatrixXcd::Identity(2, 2);
  eye.rho = 4.0;
  Eigen::VectorXcd x(2);
  x << c.point(3), c.point(9);
  Eigen::VectorXcd n(2);
  n << Complex(0.01, -0.02), Complex(-0.03, 0.005);
  const ReceivedFrame y{2.0 * x + n, 0};
  CHECK((detect_zf(y, eye, c).estimates - (x + n / 2.0)).norm() < 1e-12);

  ChannelRealization rank1;
  rank1.h = Eigen::MatrixXcd::Ones(4, 2);
  CHECK_THROWS_AS(detect_zf(ReceivedFrame{Eigen::VectorXcd::Zero(4), 0}, rank1, c), NumericalRankError);
}

TEST_CASE("mmse shrinks to zero under overwhelming noise") {
  const Constellation c(16);
  ChannelRealization ch = sample_channel(8, 2, 4);
  ch.sigma2 = 1e12;
  std::mt19937_64 rng(5);
  const Eigen::VectorXcd x = random_frame(c, 2, rng);
  const ReceivedFrame y{std::sqrt(ch.rho) * ch.h * x, 0};
  CHECK(detect_mmse(y, ch, c).estimates.norm() < 1e-9);
}

TEST_CASE("ml with one antenna is matched-filter demapping") {
  for (const int q : {4, 16, 64, 256}) {
    const Constellation c(q);
    std::mt19937_64 rng(static_cast<std::uint64_t>(q));
    for (int t = 0; t < 30; ++t) {
      ChannelRealization ch = make_channel(3, 1, 5.0, static_cast<std::uint64_t>(t) + 1000);
      ComplexGaussian noise(static_cast<std::uint64_t>(t));
      Eigen::VectorXcd y = std::sqrt(ch.rho) * ch.h * random_frame(c, 1, rng);
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise(ch.sigma2);
      const Complex mf = (ch.h.adjoint() * y)(0) / (std::sqrt(ch.rho) * ch.h.squaredNorm());
      CHECK(detect_ml(ReceivedFrame{y, 0}, ch, c).hard_symbols(0) == c.nearest_point(mf));
    }
  }
  const Constellation c256(256);
  const ChannelRealization big = sample_channel(64, 4, 1);
  CHECK_THROWS_AS(detect_ml(ReceivedFrame{Eigen::VectorXcd::Zero(64), 0}, big, c256), SearchSpaceError);
}

TEST_CASE("ml agrees with brute force and dominates every detector") {
  const Constellation c(4);
  std::mt19937_64 rng(6);
  int admm_agree = 0;
  const int frames = 300;
  for (int t = 0; t < frames; ++t) {
    const ChannelRealization ch = make_channel(2, 2, 15.0, static_cast<std::uint64_t>(t));
    const Eigen::VectorXcd x = random_frame(c, 2, rng);
    const ReceivedFrame y = transmit(x, ch, static_cast<std::uint64_t>(t) + 50000);
    const Oracle o = brute_force(y.y, ch, c);
    const auto ml = detect_ml(y, ch, c);
    CHECK(std::abs(residual_norm2(y.y, ch, ml.hard_symbols) - o.best) <= 1e-9 * (1.0 + o.best));
    for (const auto& r : {detect_admm(y, ch, c), detect_zf(y, ch, c), detect_mmse(y, ch, c)}) {
      CHECK(members(r.hard_symbols, c));
      CHECK(o.best <= residual_norm2(y.y, ch, r.hard_symbols) + 1e-12);
    }
    admm_agree += detect_admm(y, ch, c).hard_symbols == ml.hard_symbols ? 1 : 0;
  }
  CHECK(admm_agree >= frames * 95 / 100);
}

TEST_CASE("local search never raises the objective") {
  const Constellation c(16);
  std::mt19937_64 rng(11);
  DetectorConfig polished;
  polished.local_search = true;
  int improved = 0;
  for (int t = 0; t < 300; ++t) {
    const ChannelRealization ch = make_channel(4, 4, 6.0, static_cast<std::uint64_t>(t) + 4000);
    const ReceivedFrame y = transmit(random_frame(c, 4, rng), ch, static_cast<std::uint64_t>(t) + 8000);
    const double plain = residual_norm2(y.y, ch, detect_admm(y, ch, c).hard_symbols);
    const auto p = detect_admm(y, ch, c, polished);
    const double after = residual_norm2(y.y, ch, p.hard_symbols);
    CHECK(members(p.hard_symbols, c));
    CHECK(after <= plain + 1e-12);
    improved += after < plain - 1e-12 ? 1 : 0;
    // No single-entry move to a grid neighbour lowers the objective further.
    bool local_min = true;
    for (int i = 0; i < 4; ++i) {
      const auto [col, row] = c.grid_position(p.labels[static_cast<std::size_t>(i)]);
      for (int dc = -1; dc <= 1; ++dc) {
        for (int dr = -1; dr <= 1; ++dr) {
          if ((dc == 0 && dr == 0) || col + dc < 0 || col + dc >= c.side() || row + dr < 0 || row + dr >= c.side()) continue;
          Eigen::VectorXcd x = p.hard_symbols;
          x(i) = c.point(c.label_at(col + dc, row + dr));
          local_min = local_min && residual_norm2(y.y, ch, x) >= after - 1e-12;
        }
      }
    }
    CHECK(local_min);
  }
  CHECK(improved > 0);
}

TEST_CASE("mmse error rate lies between zero forcing and ml") {
  const Constellation c(4);
  std::mt19937_64 rng(7);
  long zf_err = 0;
  long mmse_err = 0;
  long ml_err = 0;
  for (int t = 0; t < 20000; ++t) {
    const ChannelRealization ch = make_channel(2, 2, 5.0, static_cast<std::uint64_t>(t) + 7000);
    const Eigen::VectorXcd x = random_frame(c, 2, rng);
    const ReceivedFrame y = transmit(x, ch, static_cast<std::uint64_t>(t) + 90000);
    auto errors = [&](const Eigen::VectorXcd& h) { return (h.array() != x.array()).count(); };
    zf_err += errors(detect_zf(y, ch, c).hard_symbols);
    mmse_err += errors(detect_mmse(y, ch, c).hard_symbols);
    ml_err += errors(detect_ml(y, ch, c).hard_symbols);
  }
  CHECK(ml_err <= mmse_err);
  CHECK(mmse_err <= zf_err);
}

TEST_CASE("admm improves on quantized mmse for the large system") {
  const Constellation c(256);
  std::mt19937_64 rng(8);
  int not_worse = 0;
  int strictly_better = 0;
  const int frames = 400;
  for (int t = 0; t < frames; ++t) {
    const ChannelRealization ch = make_channel(64, 4, 10.0, static_cast<std::uint64_t>(t) + 300);
    const Eigen::VectorXcd x = random_frame(c, 4, rng);
    const ReceivedFrame y = transmit(x, ch, static_cast<std::uint64_t>(t) + 600);
    const double ra = residual_norm2(y.y, ch, detect_admm(y, ch, c).hard_symbols);
    const double rm = residual_norm2(y.y, ch, detect_mmse(y, ch, c).hard_symbols);
    not_worse += ra <= rm + 1e-12 ? 1 : 0;
    strictly_better += ra < rm - 1e-12 ? 1 : 0;
  }
  CHECK(not_worse >= frames * 95 / 100);
  CHECK(strictly_better > 0);
}

TEST_CASE("block detector matches the free functions") {
  const Constellation c(16);
  const ChannelRealization ch = make_channel(8, 3, 8.0, 99);
  std::mt19937_64 rng(9);
  for (const auto v : {DetectorVariant::admm, DetectorVariant::zf, DetectorVariant::mmse, DetectorVariant::ml}) {
    DetectorConfig cfg;
    cfg.variant = v;
    const BlockDetector det(ch, c, cfg);
    for (int t = 0; t < 10; ++t) {
      const ReceivedFrame y = transmit(random_frame(c, 3, rng), ch, static_cast<std::uint64_t>(t));
      DetectionResult ref;
      switch (v) {
        case DetectorVariant::admm: ref = detect_admm(y, ch, c, cfg); break;
        case DetectorVariant::zf: ref = detect_zf(y, ch, c); break;
        case DetectorVariant::mmse: ref = detect_mmse(y, ch, c); break;
        case DetectorVariant::ml: ref = detect_ml(y, ch, c); break;
      }
      const auto got = det.detect(y.y);
      CHECK(got.hard_symbols == ref.hard_symbols);
      CHECK(got.labels == ref.labels);
    }
  }
}

TEST_CASE("admm without local search stays in the box") {
  const Constellation c(64);
  DetectorConfig cfg;
  cfg.local_search = false;
  std::mt19937_64 rng(10);
  for (int t = 0; t < 50; ++t) {
    const ChannelRealization ch = make_channel(16, 4, 0.0, static_cast<std::uint64_t>(t));
    const ReceivedFrame y = transmit(random_frame(c, 4, rng), ch, static_cast<std::uint64_t>(t) + 1);
    const auto r = detect_admm(y, ch, c, cfg);
    CHECK(r.iterations_used >= 1);
    CHECK(r.iterations_used <= cfg.max_iters);
    const double a = c.max_amplitude() + 1e-12;
    CHECK(r.estimates.real().cwiseAbs().maxCoeff() <= a);
    CHECK(r.estimates.imag().cwiseAbs().maxCoeff() <= a);
    for (Eigen::Index i = 0; i < r.estimates.size(); ++i) {
      CHECK(r.hard_symbols(i) == c.nearest_point(r.estimates(i)));
    }
  }
}
