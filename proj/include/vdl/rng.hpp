// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace vdl {

/// splitmix64 finalizer. Used to derive decorrelated sub-seeds from a
/// master seed so that independent random streams (world generation,
/// dataset sampling, shuffling, evaluation) never share state.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for the `index`-th stream under `master`. Distinct indices give
/// statistically independent streams; the mapping is pure.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

/// Deterministic random source. Wraps std::mt19937_64 (the engine's output
/// sequence is pinned by the standard) but hand-rolls every distribution
/// mapping: std::uniform_*_distribution results differ across standard
/// library implementations, which would break byte-identical reruns.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1). Top 53 bits of the engine output scaled by
  /// 2^-53; every representable result is an exact multiple of 2^-53.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Lemire multiply-shift; unbiased after
  /// rejection of the short low fringe.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    std::uint64_t x = engine_();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * range;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < range) {
      const std::uint64_t threshold = (0ULL - range) % range;
      while (lo < threshold) {
        x = engine_();
        m = static_cast<unsigned __int128>(x) * range;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  /// Bernoulli with success probability p.
  bool bernoulli(double p) { return next_double() < p; }

  /// Draw an index from a discrete distribution given by `weights`
  /// (nonnegative, not all zero). Inverse CDF on next_double().
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
    const double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vdl
