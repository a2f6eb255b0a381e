#pragma once

#include <limits>

#include "roughvol/model.hpp"
#include "roughvol/vol_function.hpp"

namespace roughvol {

/// Stationary standard deviation of the fOU factor: sigma_ou^2 = 1/(2 sin(pi H)).
double sigma_ou(Hurst h);
double sigma_ou_squared(Hurst h);
/// fBM scale with sigma_ou^2 = Gamma(2H+1) sigma_H^2 / 2.
double sigma_h(Hurst h);

/// Moving-average kernel of the scaled fOU process,
///
///   K(t) = [ t^{H-1/2} - int_0^t (t-s)^{H-1/2} e^{-s} ds ] / (sigma_ou Gamma(H+1/2)),
///
/// so that Z^eps_t = sigma_ou int_{-inf}^t K^eps(t-s) dW_s with
/// K^eps(t) = K(t/eps)/sqrt(eps). K is square integrable with unit norm,
/// integrable with zero total mass, behaves like t^{H-1/2} at the origin and
/// like t^{H-3/2} at infinity (negative tail).
///
/// Pointwise values up to `split_point` come from the power series of the
/// bracket; beyond it from a rewriting that isolates the (t-s)^{H-1/2}
/// singularity, and past t = 40 from the asymptotic expansion.
class KernelEval {
 public:
  explicit KernelEval(Hurst h, double quad_tol = 1e-9, double split_point = 1.0);

  Hurst hurst() const noexcept { return hurst_; }
  double sigma_ou() const noexcept { return sigma_ou_; }
  double quad_tol() const noexcept { return quad_tol_; }
  double split_point() const noexcept { return split_point_; }

  /// K(t) for t > 0. Throws DomainError at t <= 0: the kernel is singular at
  /// the origin and must be integrated there, not evaluated.
  double operator()(double t) const;
  double small_time_form(double t) const;
  double large_time_form(double t) const;

  /// K^eps(t) = K(t/eps)/sqrt(eps).
  double scaled(double t, double eps) const;

  /// int_0^x K(u) du; tends to 0 as x -> inf.
  double antiderivative(double x) const;
  /// int_lo^hi K(u) du for 0 <= lo <= hi.
  double mass(double lo, double hi) const;
  /// int_lo^hi K^eps(u) du.
  double scaled_mass(double lo, double hi, double eps) const;

  /// int_0^inf K^2 (computed once at construction).
  double l2_norm_squared() const noexcept { return l2_norm_sq_; }
  /// int_x^inf K^2.
  double l2_tail(double x) const;
  /// int_0^x K^2.
  double l2_head(double x) const;
  /// int_0^inf |K| (computed once at construction).
  double l1_norm() const noexcept { return l1_norm_; }
  /// Sign change of K (K > 0 before, K < 0 after).
  double zero_crossing() const noexcept { return zero_crossing_; }

  /// int_lo^hi K(u) K(u + lag) du, hi may be +infinity.
  double lagged_product(double lo, double hi, double lag) const;

  /// Leading coefficients: K(t) ~ c_small t^{H-1/2} (t -> 0) and
  /// K(t) ~ c_large t^{H-3/2} (t -> inf).
  double small_time_coefficient() const noexcept { return c_small_; }
  double large_time_coefficient() const noexcept { return c_large_; }

 private:
  double bracket(double p, double t) const;  // regime dispatch

  Hurst hurst_;
  double sigma_ou_;
  double quad_tol_;
  double split_point_;
  double a_;  // H - 1/2
  double c_small_, c_large_;
  double norm_a_, norm_b_;  // sigma_ou Gamma(H+1/2), sigma_ou Gamma(H+3/2)
  double l2_norm_sq_ = 0.0, l1_norm_ = 0.0, zero_crossing_ = 0.0;
};

/// B_p(t) = t^p - int_0^t (t-s)^p e^{-s} ds for p in (-1, 1), in its three
/// evaluation forms. Exposed for testing.
namespace bracket {
double series(double p, double t);
double rewritten(double p, double t);
double asymptotic(double p, double t);
}  // namespace bracket

enum class CovRepr { TimeDomain, Spectral };

/// Normalized fOU autocovariance C_Z(s), E[Z_t Z_{t+s}] = sigma_ou^2 C_Z(s/eps).
///   TimeDomain: (1/Gamma(2H+1)) [ 1/2 int e^{-|v|} |s+v|^{2H} dv - |s|^{2H} ]
///   Spectral:   (2 sin(pi H)/pi) int_0^inf cos(s x) x^{1-2H}/(1+x^2) dx
class CovarianceEval {
 public:
  explicit CovarianceEval(Hurst h, CovRepr repr = CovRepr::TimeDomain, double quad_tol = 1e-9);

  double operator()(double s) const;
  Hurst hurst() const noexcept { return hurst_; }
  CovRepr repr() const noexcept { return repr_; }
  double quad_tol() const noexcept { return quad_tol_; }

 private:
  double time_domain(double s) const;
  double spectral(double s) const;

  Hurst hurst_;
  CovRepr repr_;
  double quad_tol_;
};

double kernel_K(double t, const KernelEval& ke);
double cov_CZ(double s, const CovarianceEval& ce);

/// Normalized covariance of the Riemann-Liouville fOU started at 0:
/// C0_t(s) = int_0^t K(u) K(u+s) du / int_0^inf K^2.
double cov_RL(double t, double s, const KernelEval& ke);

/// Psi(c) = E[F_c(Z1) F_c(Z2)], (Z1, Z2) standard bivariate normal with
/// correlation c, F_c(z) = F(sigma_ou z) - <F>. Tensor Gauss-Hermite after the
/// rotation z2 = c z1 + sqrt(1-c^2) zeta; |c| > 1 - 1e-10 uses the degenerate
/// one-dimensional integral.
double psi_of_C(double c, const VolFunction& f, Hurst h, int gh_order = 40);

/// Cov(sigma_t, sigma_{t+s}) = Psi(C_Z(s/eps)).
double cov_sigma(double s, const ModelParams& mp);

}  // namespace roughvol
