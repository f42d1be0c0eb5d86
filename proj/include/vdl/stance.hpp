// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vdl {

/// The three stance classes a response can take toward its prompt's topic.
enum class Stance : int { support = 0, neutral = 1, oppose = 2 };

inline constexpr std::array<Stance, 3> kStances = {Stance::support, Stance::neutral,
                                                   Stance::oppose};
inline constexpr std::array<std::string_view, 3> kStanceNames = {"support", "neutral",
                                                                 "oppose"};

inline std::string_view stance_name(Stance s) {
  return kStanceNames[static_cast<std::size_t>(s)];
}

inline Stance stance_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStanceNames.size(); ++i) {
    if (kStanceNames[i] == name) return static_cast<Stance>(i);
  }
  throw std::invalid_argument("unknown stance name '" + std::string(name) + "'");
}

/// A point on the probability simplex over (support, neutral, oppose).
/// Components are nonnegative and sum to 1 within kSimplexTol; validate()
/// enforces this where an instance crosses an API boundary.
struct StanceVector {
  static constexpr double kSimplexTol = 1e-9;

  std::array<double, 3> p{0.0, 0.0, 0.0};

  double support() const { return p[0]; }
  double neutral() const { return p[1]; }
  double oppose() const { return p[2]; }

  double operator[](Stance s) const { return p[static_cast<std::size_t>(s)]; }
  double& operator[](Stance s) { return p[static_cast<std::size_t>(s)]; }

  static StanceVector one_hot(Stance s) {
    StanceVector v;
    v.p[static_cast<std::size_t>(s)] = 1.0;
    return v;
  }

  double sum() const { return p[0] + p[1] + p[2]; }

  bool is_valid(double tol = kSimplexTol) const {
    for (double x : p) {
      if (!(x >= 0.0) || std::isnan(x)) return false;
    }
    return std::fabs(sum() - 1.0) <= tol;
  }

  void validate() const {
    if (!is_valid()) {
      throw std::invalid_argument("stance vector is not on the probability simplex");
    }
  }

  /// Index of the largest component; ties break toward the earlier stance
  /// (support < neutral < oppose).
  Stance argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (p[i] > p[best]) best = i;
    }
    return static_cast<Stance>(best);
  }

  bool operator==(const StanceVector&) const = default;
};

inline StanceVector operator+(StanceVector a, const StanceVector& b) {
  for (std::size_t i = 0; i < 3; ++i) a.p[i] += b.p[i];
  return a;
}

inline StanceVector operator-(StanceVector a, const StanceVector& b) {
  for (std::size_t i = 0; i < 3; ++i) a.p[i] -= b.p[i];
  return a;
}

inline StanceVector operator*(double c, StanceVector v) {
  for (double& x : v.p) x *= c;
  return v;
}

/// Euclidean distance between two stance vectors. For points on the
/// 3-simplex this lies in [0, sqrt(2)], the extremes being equal vectors
/// and a pair of distinct one-hot vectors.
inline double l2_distance(const StanceVector& a, const StanceVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double d = a.p[i] - b.p[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace vdl
