#pragma once

#include <cmath>
#include <numbers>

namespace roughvol {

/// Gamma function on the whole real line except the poles. Negative
/// arguments go through the reflection formula.
inline double gamma_fn(double x) {
  if (x > 0.0) return std::tgamma(x);
  return std::numbers::pi / (std::sin(std::numbers::pi * x) * std::tgamma(1.0 - x));
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace roughvol
