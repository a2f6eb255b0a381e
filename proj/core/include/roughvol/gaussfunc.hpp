#pragma once

#include <limits>
#include <string>

#include "roughvol/quadrature.hpp"
#include "roughvol/kernel.hpp"
#include "roughvol/model.hpp"
#include "roughvol/vol_function.hpp"

namespace roughvol {

/// Gaussian moments under the stationary law Z ~ N(0, sigma_ou^2):
/// <F>, <F^2>, <F'>, <F'^2>.
struct Moments {
  double mean_F = 0.0;
  double mean_F2 = 0.0;
  double mean_Fp = 0.0;
  double mean_Fp2 = 0.0;
};

/// Largest Gauss-Hermite order the Gaussian functionals will use.
inline constexpr int kMaxGHOrder = 400;

/// Rule used for the Gaussian integrals of a given F. Gauss-Hermite at the
/// smallest of gh_order, 2 gh_order, ... (up to kMaxGHOrder) that agrees with
/// its doubling to 1e-12 relative on the integrals of F, F^2, F', F'^2, F F',
/// z F and z F F'. Steep F that Gauss-Hermite cannot resolve fall back to the
/// normal-weighted trapezoid rule, halving the step under the same test.
/// Throws NumericalError when neither converges.
struct GaussianRule {
  const quad::Rule* rule = nullptr;
  std::string name;  // "gauss_hermite(n)" or "trapezoid(step)"
};
GaussianRule resolve_gaussian_rule(const VolFunction& f, Hurst h, int gh_order = 40);

/// gh_order is a minimum; see resolve_gaussian_rule.
Moments moments(const VolFunction& f, Hurst h, int gh_order = 40);

/// sqrt(<F^2>).
double sigma_bar(const VolFunction& f, Hurst h, int gh_order = 40);

/// Phi(c) = E[F(sigma_ou Z1) (F F')(sigma_ou Z2)] for corr(Z1, Z2) = c,
/// the inner expectation of D-bar.
double phi_leverage(double c, const VolFunction& f, Hurst h, int gh_order = 40);

struct DBarResult {
  double value = 0.0;
  double abs_error = 0.0;    // summed quadrature error estimates
  double tail = 0.0;         // analytic contribution beyond the numeric range
  double upper = 0.0;        // end of the numeric range (kernel time units)
  std::size_t evaluations = 0;
};

/// D-bar = sigma_ou int_0^U Phi(C_Z(s)) K(s) ds with U = +inf by default.
/// A finite `upper` gives the finite-horizon coefficient (U = (T - t)/eps).
/// Throws NumericalError when the error estimate exceeds the target
/// 1e-7 sup|F|^3.
DBarResult d_bar_detailed(const VolFunction& f, const KernelEval& ke, const CovarianceEval& ce,
                          int gh_order = 40,
                          double upper = std::numeric_limits<double>::infinity());

double d_bar(const VolFunction& f, const KernelEval& ke, const CovarianceEval& ce,
             int gh_order = 40);

struct GroupParams {
  double sigma_bar = 0.0;
  double d_bar = 0.0;
  double tau_bar = 0.0;   // 2 / sigma_bar^2
  double mean_F = 0.0;
  double mean_F2 = 0.0;
  double var_F = 0.0;
  double mean_Fp = 0.0;
  double mean_Fp2 = 0.0;
  double d_bar_abs_error = 0.0;
  double d_bar_tail = 0.0;
  std::string gauss_rule;  // resolved Gaussian quadrature rule
};

GroupParams group_params(const ModelParams& mp, int gh_order = 40);

}  // namespace roughvol
