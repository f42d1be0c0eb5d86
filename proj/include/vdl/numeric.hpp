// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vdl {

/// Decimal rendering with 17 significant digits: enough to reproduce any
/// finite double bit-exactly on parse.
inline std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// log(sum_i exp(x_i)) with the max subtracted before exponentiation.
/// Stable for logits up to ~1e4, where naive exp() would overflow.
inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("log_sum_exp of empty range");
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

/// log(1 + exp(x)) without overflow for large |x|.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

/// Logistic sigmoid, evaluated on the side that keeps exp() bounded.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Softmax of xs / temperature, max-subtracted. temperature must be > 0.
inline std::vector<double> softmax(std::span<const double> xs, double temperature = 1.0) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (xs.empty()) throw std::invalid_argument("softmax of empty range");
  double m = xs[0] / temperature;
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = xs[i] / temperature;
    m = std::max(m, out[i]);
  }
  double total = 0.0;
  for (double& x : out) {
    x = std::exp(x - m);
    total += x;
  }
  for (double& x : out) x /= total;
  return out;
}

}  // namespace vdl
