#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace cores {

// Seedable random source used everywhere in the project. The engine is
// std::mt19937_64 (bit-exact by the standard); the distributions are
// implemented here rather than taken from <random> because the standard
// leaves those implementation-defined and we promise bit-identical
// streams across toolchains for a fixed seed.
//
// Draw order matters for reproducibility: every operation that consumes
// randomness documents the order in which it calls these methods.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Widening-multiply map; bias is < n / 2^64.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Rejection sampling; exact truncated-normal distribution on [lo, hi].
  double truncated_normal(double mean, double stddev, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("truncated_normal: lo < hi required");
    for (;;) {
      const double x = normal(mean, stddev);
      if (x >= lo && x <= hi) return x;
    }
  }

  // Index draw from an unnormalized non-negative weight vector.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0 || !std::isfinite(w))
        throw std::invalid_argument("categorical: weights must be finite and non-negative");
      total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("categorical: total weight must be positive");
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  // Fisher-Yates shuffle of index vector [0, n).
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
};

// Mixes several seed components into one 64-bit stream seed (splitmix64
// finalizer per component). Used to derive independent per-purpose seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0x9e3779b97f4a7c15ULL,
                              std::uint64_t c = 0xbf58476d1ce4e5b9ULL) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(a) ^ b) ^ c);
}

}  // namespace cores
