#pragma once

#include <string>
#include <variant>
#include <vector>

namespace roughvol {

/// F(z) = sigma_min + (sigma_max - sigma_min) / (1 + exp(-slope (z - center))).
struct BoundedSigmoid {
  double sigma_min = 0.1;
  double sigma_max = 0.3;
  double slope = 1.0;
  double center = 0.0;
};

/// C^2 monotone cubic spline through (z_i, sigma_i), continued outside the
/// knot range by exponential saturation with matching value, slope and
/// curvature, so F stays bounded with F' > 0.
struct UserTable {
  std::vector<double> z;
  std::vector<double> sigma;
};

/// Degenerate F = level. Violates the strict-monotonicity hypothesis; used for
/// the exact Black-Scholes limit.
struct ConstantVol {
  double level = 0.2;
};

/// F(z) = scale * exp(slope z). Unbounded, so outside the model hypotheses;
/// only accepted when explicitly constructed with allow_unbounded.
struct ExponentialVol {
  double scale = 0.2;
  double slope = 0.5;
};

/// The volatility function sigma = F(Z). Immutable after construction.
class VolFunction {
 public:
  using Family = std::variant<BoundedSigmoid, UserTable, ConstantVol, ExponentialVol>;

  /// Validates the family parameters; throws ConfigError on violation.
  explicit VolFunction(Family family, bool allow_unbounded = false);

  static VolFunction sigmoid(double sigma_min, double sigma_max, double slope,
                             double center = 0.0) {
    return VolFunction(BoundedSigmoid{sigma_min, sigma_max, slope, center});
  }
  static VolFunction constant(double level) { return VolFunction(ConstantVol{level}); }

  double value(double z) const;
  double derivative(double z) const;
  double second_derivative(double z) const;

  /// (F F')(z) = G'(z) where G = (F^2 - sigma_bar^2)/2.
  double f_fprime(double z) const { return value(z) * derivative(z); }

  /// Bounds used by the a.s. estimates: sup|F|, sup|F'|, sup|F F'|.
  double sup_abs() const;
  double sup_abs_derivative() const;
  double sup_abs_f_fprime() const;

  bool is_constant() const;
  bool is_bounded() const;
  /// F(z) + F(2 center - z) is constant (sigmoid family only).
  bool is_point_symmetric() const;

  const Family& family() const { return family_; }
  std::string family_name() const;

  /// Returns alpha * F (same family, scaled levels).
  VolFunction scaled(double alpha) const;

 private:
  struct Spline {
    std::vector<double> z, y, m;  // knots, values, second derivatives
    double left_rate = 1.0, right_rate = 1.0;
    double left_amp = 0.0, right_amp = 0.0;    // tail amplitudes A
    double left_level = 0.0, right_level = 0.0;  // asymptotes L
  };

  void build_spline(const UserTable& t);
  // value/derivatives of the spline family: order 0, 1, 2
  double spline_eval(double z, int order) const;

  Family family_;
  Spline spline_;
  double sup_f_ = 0.0, sup_fp_ = 0.0, sup_ffp_ = 0.0;
};

}  // namespace roughvol
