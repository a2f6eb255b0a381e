#include "roughvol/gaussfunc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "roughvol/error.hpp"
#include "roughvol/quadrature.hpp"
#include "roughvol/special.hpp"

namespace roughvol {
namespace {

const quad::Rule& hermite(int order) {
  if (order < 2 || order > kMaxGHOrder)
    throw DomainError("gh_order must be in [2, " + std::to_string(kMaxGHOrder) + "]");
  return quad::cached_gauss_hermite_normal(static_cast<std::size_t>(order));
}

std::array<double, 7> probe(const VolFunction& f, double sig, const quad::Rule& rule) {
  std::array<double, 7> m{};
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double z = rule.nodes[i], w = rule.weights[i];
    const double v = f.value(sig * z), d = f.derivative(sig * z), g = v * d;
    const double terms[7] = {v, v * v, d, d * d, g, z * v, z * g};
    for (int k = 0; k < 7; ++k) m[k] += w * terms[k];
  }
  return m;
}

bool agree(const std::array<double, 7>& a, const std::array<double, 7>& b) {
  for (int k = 0; k < 7; ++k)
    if (!(std::abs(a[k] - b[k]) <= 1e-12 * (std::abs(a[k]) + std::abs(b[k])) + 1e-16)) return false;
  return true;
}

constexpr int kMaxTrapezoidLevel = 6;  // step 0.4 / 64

// Centered leverage functional Phi(c) - Phi(0) = E[(F - <F>)(Z1) (G' - <G'>)(Z2)],
// evaluated on a fixed Hermite rule with the outer factor tabulated.
class CenteredPhi {
 public:
  CenteredPhi(const VolFunction& f, Hurst h, const quad::Rule& rule)
      : f_(f), gh_(rule), sig_(sigma_ou(h)), fc_(gh_.size()) {
    for (std::size_t i = 0; i < gh_.size(); ++i) {
      fc_[i] = f.value(sig_ * gh_.nodes[i]);
      mean_f_ += gh_.weights[i] * fc_[i];
      const double g = f.f_fprime(sig_ * gh_.nodes[i]);
      mean_g_ += gh_.weights[i] * g;
      ez_f_ += gh_.weights[i] * gh_.nodes[i] * fc_[i];
      ez_g_ += gh_.weights[i] * gh_.nodes[i] * g;
    }
    for (auto& v : fc_) v -= mean_f_;
  }

  double operator()(double c) const {
    if (c == 0.0) return 0.0;
    const std::size_t n = gh_.size();
    if (std::abs(c) > 1.0 - 1e-10) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double z2 = c > 0.0 ? gh_.nodes[i] : -gh_.nodes[i];
        sum += gh_.weights[i] * fc_[i] * (f_.f_fprime(sig_ * z2) - mean_g_);
      }
      return sum;
    }
    const double r = std::sqrt(1.0 - c * c);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        inner += gh_.weights[j] * f_.f_fprime(sig_ * (c * gh_.nodes[i] + r * gh_.nodes[j]));
      sum += gh_.weights[i] * fc_[i] * (inner - mean_g_);
    }
    return sum;
  }

  double at_zero() const { return mean_f_ * mean_g_; }
  // d/dc Phi at 0 = E[Z F(sigma Z)] E[Z G'(sigma Z)] (Gaussian integration by parts)
  double slope_at_zero() const { return ez_f_ * ez_g_; }

 private:
  const VolFunction& f_;
  const quad::Rule& gh_;
  double sig_;
  std::vector<double> fc_;
  double mean_f_ = 0.0, mean_g_ = 0.0, ez_f_ = 0.0, ez_g_ = 0.0;
};

}  // namespace

GaussianRule resolve_gaussian_rule(const VolFunction& f, Hurst h, int gh_order) {
  hermite(gh_order);
  if (f.is_constant()) return {&hermite(gh_order), "gauss_hermite(" + std::to_string(gh_order) + ")"};
  const double sig = sigma_ou(h);
  int n = gh_order;
  auto coarse = probe(f, sig, hermite(n));
  while (n < kMaxGHOrder) {
    const int m = std::min(2 * n, kMaxGHOrder);
    const auto fine = probe(f, sig, hermite(m));
    if (agree(coarse, fine)) return {&hermite(n), "gauss_hermite(" + std::to_string(n) + ")"};
    n = m;
    coarse = fine;
  }
  coarse = probe(f, sig, quad::cached_trapezoid_normal(0));
  for (int level = 0; level < kMaxTrapezoidLevel; ++level) {
    const auto fine = probe(f, sig, quad::cached_trapezoid_normal(level + 1));
    if (agree(coarse, fine)) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "trapezoid(%g)", 0.4 / std::ldexp(1.0, level));
      return {&quad::cached_trapezoid_normal(level), buf};
    }
    coarse = fine;
  }
  throw NumericalError("Gaussian integrals of the volatility function do not converge (Gauss-Hermite up to order " +
                       std::to_string(kMaxGHOrder) + ", trapezoid down to step " +
                       std::to_string(0.4 / std::ldexp(1.0, kMaxTrapezoidLevel)) + ")");
}

Moments moments(const VolFunction& f, Hurst h, int gh_order) {
  const quad::Rule& gh = *resolve_gaussian_rule(f, h, gh_order).rule;
  const double sig = sigma_ou(h);
  Moments m;
  for (std::size_t i = 0; i < gh.size(); ++i) {
    const double z = sig * gh.nodes[i];
    const double v = f.value(z), d = f.derivative(z), w = gh.weights[i];
    m.mean_F += w * v;
    m.mean_F2 += w * v * v;
    m.mean_Fp += w * d;
    m.mean_Fp2 += w * d * d;
  }
  return m;
}

double sigma_bar(const VolFunction& f, Hurst h, int gh_order) {
  return std::sqrt(moments(f, h, gh_order).mean_F2);
}

double phi_leverage(double c, const VolFunction& f, Hurst h, int gh_order) {
  if (!(std::abs(c) <= 1.0)) throw DomainError("phi_leverage: correlation must lie in [-1, 1]");
  const CenteredPhi phi(f, h, *resolve_gaussian_rule(f, h, gh_order).rule);
  return phi.at_zero() + phi(c);
}

DBarResult d_bar_detailed(const VolFunction& f, const KernelEval& ke, const CovarianceEval& ce,
                          int gh_order, double upper) {
  if (ke.hurst().value() != ce.hurst().value())
    throw DomainError("d_bar: kernel and covariance evaluators use different Hurst exponents");
  if (!(upper > 0.0)) throw DomainError("d_bar: upper limit must be > 0");
  DBarResult out;
  if (f.is_constant()) return out;

  const Hurst h = ke.hurst();
  const double a = h.kernel_exponent();
  const double sig = ke.sigma_ou();
  const CenteredPhi phi(f, h, *resolve_gaussian_rule(f, h, gh_order).rule);
  const double scale = std::pow(f.sup_abs(), 3);
  const double target = 1e-7 * scale;
  const double tol = 1e-5 * target;

  auto integrand = [&](double s) { return phi(ce(s)) * ke(s); };

  // The centered integrand decays like s^{3H-7/2}; Phi(0) only pairs with
  // int K, which is known in closed form.
  constexpr double kNumericEnd = 1024.0;
  const double end = std::min(upper, kNumericEnd);
  auto add = [&](const quad::Result& r) {
    out.value += r.value;
    out.abs_error += r.abs_error;
    out.evaluations += r.evaluations;
    if (!r.converged) throw NumericalError("d_bar: outer quadrature did not converge");
  };
  add(quad::integrate_graded_left(integrand, 0.0, std::min(1.0, end), a, tol, 1e-12));
  for (double lo = 1.0; lo < end;) {
    const double hi = std::min(end, 2.0 * lo);
    add(quad::integrate(integrand, lo, hi, tol, 1e-12));
    lo = hi;
  }
  out.upper = end;
  if (upper > kNumericEnd) {
    // Phi_c(C) ~ Phi'(0) C, C ~ s^{2H-2}/Gamma(2H-1), K ~ c_large s^{H-3/2}
    const double e = 3.0 * h.value() - 3.5;
    const double coef = phi.slope_at_zero() * ke.large_time_coefficient() /
                        gamma_fn(2.0 * h.value() - 1.0);
    double tail = coef * std::pow(end, e + 1.0) / -(e + 1.0);
    if (std::isfinite(upper)) tail -= coef * std::pow(upper, e + 1.0) / -(e + 1.0);
    out.tail = tail;
    out.value += tail;
  }
  // Phi(0) int_0^U K
  out.value += phi.at_zero() * ke.antiderivative(upper);
  out.value *= sig;
  out.abs_error *= sig;
  out.tail *= sig;
  if (!(out.abs_error <= target) || !std::isfinite(out.value))
    throw NumericalError("d_bar: error estimate " + std::to_string(out.abs_error) +
                         " exceeds target " + std::to_string(target));
  return out;
}

double d_bar(const VolFunction& f, const KernelEval& ke, const CovarianceEval& ce, int gh_order) {
  return d_bar_detailed(f, ke, ce, gh_order).value;
}

GroupParams group_params(const ModelParams& mp, int gh_order) {
  mp.validate();
  GroupParams gp;
  const GaussianRule rule = resolve_gaussian_rule(mp.vol_fn, mp.hurst, gh_order);
  gp.gauss_rule = rule.name;
  const Moments m = moments(mp.vol_fn, mp.hurst, gh_order);
  gp.mean_F = m.mean_F;
  gp.mean_F2 = m.mean_F2;
  gp.mean_Fp = m.mean_Fp;
  gp.mean_Fp2 = m.mean_Fp2;
  gp.sigma_bar = std::sqrt(m.mean_F2);
  gp.tau_bar = 2.0 / m.mean_F2;
  {
    const quad::Rule& gh = *rule.rule;
    const double sig = sigma_ou(mp.hurst);
    double v = 0.0;
    for (std::size_t i = 0; i < gh.size(); ++i) {
      const double d = mp.vol_fn.value(sig * gh.nodes[i]) - m.mean_F;
      v += gh.weights[i] * d * d;
    }
    gp.var_F = v;
  }
  const KernelEval ke(mp.hurst);
  const CovarianceEval ce(mp.hurst);
  const DBarResult db = d_bar_detailed(mp.vol_fn, ke, ce, gh_order);
  gp.d_bar = db.value;
  gp.d_bar_abs_error = db.abs_error;
  gp.d_bar_tail = db.tail;
  return gp;
}

}  // namespace roughvol
