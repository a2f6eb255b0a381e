#pragma once

#include "roughvol/vol_function.hpp"

namespace roughvol {

/// Hurst exponent of the volatility factor, restricted to the rough regime
/// 0 < H < 1/2.
class Hurst {
 public:
  explicit Hurst(double value);
  double value() const noexcept { return value_; }
  /// H - 1/2, the exponent of the kernel singularity at the origin.
  double kernel_exponent() const noexcept { return value_ - 0.5; }

 private:
  double value_;
};

/// Parameters of the fast mean-reverting rough stochastic volatility model
///   dX = F(Z^eps) X dW*,  W* = rho W + sqrt(1 - rho^2) B,
/// with Z^eps the eps-scaled fractional Ornstein-Uhlenbeck factor driven by W.
struct ModelParams {
  Hurst hurst{0.3};
  double eps = 0.05;        // mean-reversion time scale (years)
  double rho = -0.5;        // leverage
  VolFunction vol_fn = VolFunction::sigmoid(0.1, 0.3, 1.0);
  double x0 = 100.0;        // spot
  double maturity = 1.0;    // T (years)

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
};

}  // namespace roughvol
