#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include "semlink/modem.hpp"

namespace semlink {

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Folds a sequence of indices into a seed: s <- mix64(s ^ mix64(i)) per index.
// Each (master, i0, i1, ...) tuple yields its own stream, so adding trials or
// SNR points never shifts the seeds of existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (const std::uint64_t i : path) s = mix64(s ^ mix64(i + 0x632be59bd9b4e019ull));
  return s;
}

// Circularly-symmetric complex Gaussian samples from a seeded engine.
class ComplexGaussian {
 public:
  explicit ComplexGaussian(std::uint64_t seed) : engine_(seed) {}

  // CN(0, variance): real and imaginary parts each N(0, variance / 2).
  Complex operator()(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace semlink
