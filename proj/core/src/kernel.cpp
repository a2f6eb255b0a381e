#include "roughvol/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "roughvol/error.hpp"
#include "roughvol/quadrature.hpp"
#include "roughvol/special.hpp"

namespace roughvol {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAsymptoticFrom = 40.0;
constexpr double kTailStart = 1e4;  // numeric/analytic handover of infinite integrals

// Sum_{k>=0} t^{p+k+1} / (k! (p+k+1)) = int_0^t u^p e^u du; all terms positive.
double power_exp_series(double p, double t) {
  double term = t;  // t^{k+1}/k!
  double sum = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double c = term / (p + k + 1.0);
    sum += c;
    if (k > t && c < 1e-17 * sum) break;
    term *= t / (k + 1.0);
  }
  return std::pow(t, p) * sum;
}

// Integrates g over [lo, hi] (hi finite) on panels adapted to a possible
// algebraic singularity at 0 of exponent beta and power-law decay.
template <class G>
double panel_integral(G&& g, double lo, double hi, double first, double beta, double tol) {
  double sum = 0.0;
  double x = lo;
  if (x == 0.0) {
    const double b = std::min(first, hi);
    sum += quad::integrate_graded_left(g, 0.0, b, beta, tol, 1e-13).value;
    x = b;
  }
  while (x < hi) {
    const double next = std::min(hi, std::max(2.0 * x, x + first));
    sum += quad::integrate(g, x, next, tol, 1e-13).value;
    x = next;
  }
  return sum;
}

}  // namespace

double sigma_ou_squared(Hurst h) { return 0.5 / std::sin(kPi * h.value()); }
double sigma_ou(Hurst h) { return std::sqrt(sigma_ou_squared(h)); }
double sigma_h(Hurst h) {
  return std::sqrt(2.0 * sigma_ou_squared(h) / std::tgamma(2.0 * h.value() + 1.0));
}

namespace bracket {

double series(double p, double t) {
  if (t <= 0.0) throw DomainError("bracket::series: t must be > 0");
  // t^p [1 - e^{-t} sum_k t^{k+1} / (k! (p+k+1))]
  return std::pow(t, p) - std::exp(-t) * power_exp_series(p, t);
}

double rewritten(double p, double t) {
  if (t <= 0.0) throw DomainError("bracket::rewritten: t must be > 0");
  // B = t^p e^{-t/2} + int_0^{t/2} [t^p - (t-s)^p] e^{-s} ds - e^{-t} int_0^{t/2} u^p e^u du
  const double tp = std::pow(t, p);
  auto inner = [&](double s) { return -tp * std::expm1(p * std::log1p(-s / t)) * std::exp(-s); };
  const double i1 = quad::integrate(inner, 0.0, 0.5 * t, 1e-17 * tp, 1e-15).value;
  const double i2 = std::exp(-t) * power_exp_series(p, 0.5 * t);
  return tp * std::exp(-0.5 * t) + i1 - i2;
}

double asymptotic(double p, double t) {
  if (t <= 0.0) throw DomainError("bracket::asymptotic: t must be > 0");
  // -t^p sum_{k>=1} (-p)_k t^{-k}, truncated at the smallest term
  double term = -p / t;
  double sum = term;
  for (int k = 1; k < 400; ++k) {
    const double next = term * (k - p) / t;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return -std::pow(t, p) * sum;
}

}  // namespace bracket

KernelEval::KernelEval(Hurst h, double quad_tol, double split_point)
    : hurst_(h),
      sigma_ou_(roughvol::sigma_ou(h)),
      quad_tol_(quad_tol),
      split_point_(split_point),
      a_(h.kernel_exponent()) {
  if (!(quad_tol > 0.0) || quad_tol > 1e-3) throw DomainError("KernelEval: quad_tol must be in (0, 1e-3]");
  if (!(split_point > 0.0) || split_point > kAsymptoticFrom)
    throw DomainError("KernelEval: split_point must be in (0, 40]");
  norm_a_ = sigma_ou_ * std::tgamma(a_ + 1.0);
  norm_b_ = sigma_ou_ * std::tgamma(a_ + 2.0);
  c_small_ = 1.0 / norm_a_;
  c_large_ = 1.0 / (sigma_ou_ * gamma_fn(a_));

  l2_norm_sq_ = lagged_product(0.0, std::numeric_limits<double>::infinity(), 0.0);
  if (std::abs(l2_norm_sq_ - 1.0) > 100.0 * quad_tol_)
    throw NumericalError("KernelEval: int K^2 = " + std::to_string(l2_norm_sq_) +
                         " deviates from 1 beyond tolerance");

  // K > 0 before its single zero, K < 0 after.
  double lo = 1e-3, hi = 1.0;
  while ((*this)(hi) > 0.0) hi *= 2.0;
  while ((*this)(lo) < 0.0) lo *= 0.5;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((*this)(mid) > 0.0 ? lo : hi) = mid;
  }
  zero_crossing_ = 0.5 * (lo + hi);
  l1_norm_ = 2.0 * antiderivative(zero_crossing_);
}

double KernelEval::bracket(double p, double t) const {
  if (t <= split_point_) return bracket::series(p, t);
  if (t <= kAsymptoticFrom) return bracket::rewritten(p, t);
  return bracket::asymptotic(p, t);
}

double KernelEval::operator()(double t) const {
  if (!(t > 0.0)) throw DomainError("kernel K is singular at t <= 0 (got t = " + std::to_string(t) + ")");
  if (std::isinf(t)) return 0.0;
  return bracket(a_, t) / norm_a_;
}

double KernelEval::small_time_form(double t) const {
  if (!(t > 0.0)) throw DomainError("kernel K: t must be > 0");
  return bracket::series(a_, t) / norm_a_;
}

double KernelEval::large_time_form(double t) const {
  if (!(t > 0.0)) throw DomainError("kernel K: t must be > 0");
  return (t > kAsymptoticFrom ? bracket::asymptotic(a_, t) : bracket::rewritten(a_, t)) / norm_a_;
}

double KernelEval::scaled(double t, double eps) const {
  if (!(eps > 0.0)) throw DomainError("KernelEval::scaled: eps must be > 0");
  return (*this)(t / eps) / std::sqrt(eps);
}

double KernelEval::antiderivative(double x) const {
  if (x < 0.0 || std::isnan(x)) throw DomainError("KernelEval::antiderivative: x must be >= 0");
  if (x == 0.0 || std::isinf(x)) return 0.0;
  return bracket(a_ + 1.0, x) / norm_b_;
}

double KernelEval::mass(double lo, double hi) const {
  if (!(lo >= 0.0 && hi >= lo)) throw DomainError("KernelEval::mass: need 0 <= lo <= hi");
  return antiderivative(hi) - antiderivative(lo);
}

double KernelEval::scaled_mass(double lo, double hi, double eps) const {
  if (!(eps > 0.0)) throw DomainError("KernelEval::scaled_mass: eps must be > 0");
  return std::sqrt(eps) * mass(lo / eps, hi / eps);
}

double KernelEval::lagged_product(double lo, double hi, double lag) const {
  if (!(lo >= 0.0 && hi >= lo && lag >= 0.0))
    throw DomainError("KernelEval::lagged_product: need 0 <= lo <= hi and lag >= 0");
  if (hi == lo) return 0.0;
  auto g = [&](double u) { return (*this)(u) * (*this)(u + lag); };
  const double beta = lag > 0.0 ? a_ : 2.0 * a_;
  const double first = lag > 0.0 ? std::min(lag, 1.0) : 1.0;
  const double tol = 1e-4 * quad_tol_;
  if (std::isfinite(hi)) return panel_integral(g, lo, hi, first, beta, tol);

  // K(u) K(u+lag) = c^2 u^{2a-2} [1 + (2(1-a) + (a-1) lag)/u + O(u^-2)] beyond X
  const double X = std::max({kTailStart, kTailStart * lag, lo});
  const double head = panel_integral(g, lo, X, first, beta, tol);
  const double c1 = 2.0 * (1.0 - a_) + (a_ - 1.0) * lag;
  const double tail = c_large_ * c_large_ *
                      (std::pow(X, 2.0 * a_ - 1.0) / (1.0 - 2.0 * a_) +
                       c1 * std::pow(X, 2.0 * a_ - 2.0) / (2.0 - 2.0 * a_));
  return head + tail;
}

double KernelEval::l2_tail(double x) const {
  if (x < 0.0 || std::isnan(x)) throw DomainError("KernelEval::l2_tail: x must be >= 0");
  if (x == 0.0) return l2_norm_sq_;
  return lagged_product(x, std::numeric_limits<double>::infinity(), 0.0);
}

double KernelEval::l2_head(double x) const {
  if (x < 0.0 || std::isnan(x)) throw DomainError("KernelEval::l2_head: x must be >= 0");
  if (std::isinf(x)) return l2_norm_sq_;
  if (x > kTailStart) return l2_norm_sq_ - l2_tail(x);
  return lagged_product(0.0, x, 0.0);
}

CovarianceEval::CovarianceEval(Hurst h, CovRepr repr, double quad_tol)
    : hurst_(h), repr_(repr), quad_tol_(quad_tol) {
  if (!(quad_tol > 0.0) || quad_tol > 1e-3)
    throw DomainError("CovarianceEval: quad_tol must be in (0, 1e-3]");
}

double CovarianceEval::operator()(double s) const {
  if (std::isnan(s)) throw DomainError("CovarianceEval: s is NaN");
  s = std::abs(s);
  if (s == 0.0) return 1.0;
  if (std::isinf(s)) return 0.0;
  return repr_ == CovRepr::TimeDomain ? time_domain(s) : spectral(s);
}

double CovarianceEval::time_domain(double s) const {
  const double H2 = 2.0 * hurst_.value();
  const double g = std::tgamma(H2 + 1.0);
  const double sp = std::pow(s, H2);
  const double tol = 1e-4 * quad_tol_ * g;
  constexpr double kCut = 60.0;  // e^{-v} negligible past v = kCut

  // (s+v)^{2H} - s^{2H} + |s-v|^{2H} - s^{2H}, written to avoid cancellation
  auto d = [&](double v) {
    const double up = sp * std::expm1(H2 * std::log1p(v / s));
    const double down = v < s ? sp * std::expm1(H2 * std::log1p(-v / s))
                              : std::pow(v - s, H2) - sp;
    return up + down;
  };
  auto f = [&](double v) { return std::exp(-v) * d(v); };

  double total = 0.0;
  if (s <= kCut) {
    total += quad::integrate_graded_right(f, 0.0, s, H2, tol, 1e-13).value;
    total += quad::integrate_graded_left(f, s, s + 1.0, H2, tol, 1e-13).value;
    total += quad::integrate(f, s + 1.0, s + 1.0 + kCut, tol, 1e-13).value;
  } else {
    total += quad::integrate(f, 0.0, kCut, tol, 1e-13).value;
  }
  return 0.5 * total / g;
}

double CovarianceEval::spectral(double s) const {
  const double e = 1.0 - 2.0 * hurst_.value();
  const double pref = 2.0 * std::sin(kPi * hurst_.value()) / kPi;
  const double tol = 1e-4 * quad_tol_ / pref;
  auto g = [&](double x) { return x > 0.0 ? std::pow(x, e) / (1.0 + x * x) : 0.0; };
  auto f = [&](double x) { return std::cos(s * x) * g(x); };

  // Up to the first zero of cos(s x): graded at the origin, then doubling panels.
  const double x0 = 0.5 * kPi / s;
  double head = quad::integrate_graded_left(f, 0.0, std::min(x0, 1.0), e, tol, 1e-13).value;
  for (double x = 1.0; x < x0;) {
    const double next = std::min(x0, 2.0 * x);
    head += quad::integrate(f, x, next, tol, 1e-13).value;
    x = next;
  }

  // Half periods between consecutive zeros, one sign each.
  const quad::Rule& gl = quad::cached_gauss_legendre(24);
  auto half_period = [&](long k) {
    const double lo = (k + 0.5) * kPi / s, hi = (k + 1.5) * kPi / s;
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    double sum = 0.0;
    for (std::size_t i = 0; i < gl.size(); ++i) sum += gl.weights[i] * f(c + h * gl.nodes[i]);
    return sum * h;
  };
  long k = 0;
  while ((k + 0.5) * kPi / s < 8.0) head += half_period(k++);

  // Alternating tail, accelerated.
  constexpr int kTerms = 60;
  std::vector<double> partial(kTerms);
  double run = head;
  for (int j = 0; j < kTerms; ++j) {
    run += half_period(k + j);
    partial[j] = run;
  }
  const double full = quad::wynn_epsilon(partial);
  const double shorter = quad::wynn_epsilon(std::span<const double>(partial).first(kTerms - 10));
  if (!(std::abs(full - shorter) < 1e3 * tol + 1e-12 * std::abs(full)))
    throw NumericalError("spectral covariance: tail extrapolation did not settle at s = " +
                         std::to_string(s));
  return pref * full;
}

double kernel_K(double t, const KernelEval& ke) { return ke(t); }
double cov_CZ(double s, const CovarianceEval& ce) { return ce(s); }

double cov_RL(double t, double s, const KernelEval& ke) {
  if (!(t >= 0.0) || !(s >= 0.0)) throw DomainError("cov_RL: need t >= 0 and s >= 0");
  if (t == 0.0) return 0.0;
  return ke.lagged_product(0.0, t, s) / ke.l2_norm_squared();
}

double psi_of_C(double c, const VolFunction& f, Hurst h, int gh_order) {
  if (!(std::abs(c) <= 1.0)) throw DomainError("psi_of_C: correlation must lie in [-1, 1]");
  if (gh_order < 2 || gh_order > 400) throw DomainError("psi_of_C: gh_order must be in [2, 400]");
  const quad::Rule& gh = quad::cached_gauss_hermite_normal(static_cast<std::size_t>(gh_order));
  const double sig = sigma_ou(h);
  const std::size_t n = gh.size();

  double mean = 0.0;
  std::vector<double> fc(n);
  for (std::size_t i = 0; i < n; ++i) {
    fc[i] = f.value(sig * gh.nodes[i]);
    mean += gh.weights[i] * fc[i];
  }
  for (auto& v : fc) v -= mean;

  if (std::abs(c) > 1.0 - 1e-10) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double other = c > 0.0 ? fc[i] : f.value(-sig * gh.nodes[i]) - mean;
      sum += gh.weights[i] * fc[i] * other;
    }
    return sum;
  }
  const double r = std::sqrt(1.0 - c * c);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      inner += gh.weights[j] * (f.value(sig * (c * gh.nodes[i] + r * gh.nodes[j])) - mean);
    sum += gh.weights[i] * fc[i] * inner;
  }
  return sum;
}

double cov_sigma(double s, const ModelParams& mp) {
  const CovarianceEval ce(mp.hurst);
  return psi_of_C(ce(s / mp.eps), mp.vol_fn, mp.hurst);
}

}  // namespace roughvol
