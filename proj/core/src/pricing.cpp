#include "roughvol/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roughvol/error.hpp"
#include "roughvol/quadrature.hpp"
#include "roughvol/special.hpp"

namespace roughvol {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Zero-rate call with total variance v > 0 and its x-derivatives.
BSGreeks call_greeks(double x, double k, double v) {
  const double sv = std::sqrt(v);
  const double d1 = (std::log(x / k) + 0.5 * v) / sv;
  const double d2 = d1 - sv;
  const double pdf = normal_pdf(d1);
  BSGreeks g;
  g.price = x * normal_cdf(d1) - k * normal_cdf(d2);
  g.delta = normal_cdf(d1);
  g.gamma = pdf / (x * sv);
  g.d2 = x * pdf / sv;
  g.d12 = g.d2 * (1.0 - d1 / sv);
  return g;
}

BSGreeks ramp_greeks(double x, const SmoothRamp& r, double v) {
  const auto a = call_greeks(x, r.k1, v), b = call_greeks(x, r.k2, v);
  return {a.price - b.price, a.delta - b.delta, a.gamma - b.gamma, a.d2 - b.d2, a.d12 - b.d12};
}

// With u = log x and X = x e^{-v/2 + sqrt(v) z}:
//   x Q' = E[X h'(X)],  x^2 Q'' = E[X^2 h''(X)],
//   x d/dx (x^2 Q'') = E[X^2 h''(X) z] / sqrt(v)  (Gaussian score in u).
BSGreeks custom_greeks(double x, const SmoothCustom& c, double v, bool need_d12) {
  BSGreeks g;
  if (v <= 0.0) {
    g.price = c.h(x);
    g.delta = c.dh(x);
    g.gamma = c.d2h(x);
    g.d2 = x * x * g.gamma;
    g.d12 = need_d12 ? kNaN : 0.0;
    return g;
  }
  const auto& rule = quad::cached_gauss_hermite_normal(kPayoffGHOrder);
  const double sv = std::sqrt(v);
  double p = 0.0, dx = 0.0, d2 = 0.0, d12 = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double z = rule.nodes[i], w = rule.weights[i];
    const double xx = x * std::exp(-0.5 * v + sv * z);
    p += w * c.h(xx);
    dx += w * xx * c.dh(xx);
    const double s = xx * xx * c.d2h(xx);
    d2 += w * s;
    d12 += w * s * z;
  }
  g.price = p;
  g.delta = dx / x;
  g.d2 = d2;
  g.gamma = d2 / (x * x);
  g.d12 = d12 / sv;
  return g;
}

}  // namespace

Payoff::Payoff(Kind kind, double x_ref) : kind_(std::move(kind)) {
  if (const auto* c = std::get_if<Call>(&kind_)) {
    if (!(c->strike > 0.0) || !std::isfinite(c->strike)) throw ConfigError("strike", "must be > 0");
  } else if (const auto* r = std::get_if<SmoothRamp>(&kind_)) {
    if (!(r->k1 > 0.0 && r->k2 > r->k1 && std::isfinite(r->k2)))
      throw ConfigError("ramp", "strikes must satisfy 0 < k1 < k2");
    if (!(r->width > 0.0) || !std::isfinite(r->width)) throw ConfigError("ramp.width", "must be > 0");
  } else {
    const auto& c = std::get<SmoothCustom>(kind_);
    if (!c.h || !c.dh || !c.d2h) throw ConfigError("payoff", "custom payoff needs h, h' and h''");
    if (!(x_ref > 0.0)) throw ConfigError("payoff", "reference spot must be > 0");
    for (int k = -4; k <= 4; ++k) {
      const double x = x_ref * std::exp(0.25 * k), dx = 1e-4 * x;
      const double fd1 = (c.h(x + dx) - c.h(x - dx)) / (2 * dx);
      const double fd2 = (c.dh(x + dx) - c.dh(x - dx)) / (2 * dx);
      const double s1 = std::max({1.0, std::abs(c.h(x)) / x, std::abs(c.dh(x))});
      const double s2 = std::max(s1 / x, std::abs(c.d2h(x)));
      if (std::abs(fd1 - c.dh(x)) > 1e-5 * s1 || std::abs(fd2 - c.d2h(x)) > 1e-5 * s2)
        throw ConfigError("payoff", "derivatives of '" + c.name + "' inconsistent near x = " +
                                        std::to_string(x));
    }
  }
}

double Payoff::value(double x) const {
  if (const auto* c = std::get_if<Call>(&kind_)) return std::max(x - c->strike, 0.0);
  if (const auto* r = std::get_if<SmoothRamp>(&kind_)) return ramp_greeks(x, *r, r->width * r->width).price;
  return std::get<SmoothCustom>(kind_).h(x);
}

double Payoff::derivative(double x) const {
  if (const auto* c = std::get_if<Call>(&kind_)) return x > c->strike ? 1.0 : 0.0;
  if (const auto* r = std::get_if<SmoothRamp>(&kind_)) return ramp_greeks(x, *r, r->width * r->width).delta;
  return std::get<SmoothCustom>(kind_).dh(x);
}

double Payoff::second_derivative(double x) const {
  if (std::holds_alternative<Call>(kind_)) return 0.0;  // distributional at the strike
  if (const auto* r = std::get_if<SmoothRamp>(&kind_)) return ramp_greeks(x, *r, r->width * r->width).gamma;
  return std::get<SmoothCustom>(kind_).d2h(x);
}

std::string Payoff::name() const {
  if (std::holds_alternative<Call>(kind_)) return "call";
  if (std::holds_alternative<SmoothRamp>(kind_)) return "ramp";
  return std::get<SmoothCustom>(kind_).name;
}

double Payoff::strike() const {
  if (const auto* c = std::get_if<Call>(&kind_)) return c->strike;
  return kNaN;
}

BSGreeks bs_greeks(double x, const Payoff& payoff, double sigma, double tau) {
  if (!(x > 0.0)) throw DomainError("bs_greeks: spot must be > 0");
  if (!(sigma >= 0.0) || !(tau >= 0.0)) throw DomainError("bs_greeks: sigma and tau must be >= 0");
  const double v = sigma * sigma * tau;
  if (const auto* c = std::get_if<Call>(&payoff.kind())) {
    if (!(v > 0.0)) throw DomainError("bs_greeks: call greeks need sigma^2 tau > 0");
    return call_greeks(x, c->strike, v);
  }
  if (const auto* r = std::get_if<SmoothRamp>(&payoff.kind()))
    return ramp_greeks(x, *r, v + r->width * r->width);
  return custom_greeks(x, std::get<SmoothCustom>(payoff.kind()), v, true);
}

double bs_price(double x, const Payoff& payoff, double sigma, double tau) {
  if (!(x > 0.0)) throw DomainError("bs_price: spot must be > 0");
  if (!(sigma >= 0.0) || !(tau >= 0.0)) throw DomainError("bs_price: sigma and tau must be >= 0");
  const double v = sigma * sigma * tau;
  if (v == 0.0) return payoff.value(x);
  if (const auto* c = std::get_if<Call>(&payoff.kind())) return call_greeks(x, c->strike, v).price;
  if (const auto* r = std::get_if<SmoothRamp>(&payoff.kind()))
    return ramp_greeks(x, *r, v + r->width * r->width).price;
  return custom_greeks(x, std::get<SmoothCustom>(payoff.kind()), v, false).price;
}

OperatorGreeks bs_operator_greeks(double x, const Payoff& payoff, double sigma, double tau) {
  if (!(tau > 0.0)) throw DomainError("bs_operator_greeks: tau must be > 0");
  if (!(sigma > 0.0)) throw DomainError("bs_operator_greeks: sigma must be > 0");
  const auto g = bs_greeks(x, payoff, sigma, tau);
  return {g.d2, g.d12};
}

PriceResult corrected_price(const ModelParams& mp, const GroupParams& gp, const Payoff& payoff,
                            double t, double x) {
  mp.validate();
  if (x <= 0.0) x = mp.x0;
  if (!(t >= 0.0 && t <= mp.maturity)) throw DomainError("corrected_price: need 0 <= t <= T");
  PriceResult r;
  const double tau = mp.maturity - t;
  const bool is_call = std::holds_alternative<Call>(payoff.kind());
  if (tau == 0.0) {
    r.q0 = r.q_eps = payoff.value(x);
    r.implied_vol_inverted = r.implied_vol_asymptotic = kNaN;
    return r;
  }
  const auto g = bs_greeks(x, payoff, gp.sigma_bar, tau);
  r.q0 = g.price;
  r.d2 = g.d2;
  r.d12 = g.d12;
  r.q1 = tau * gp.d_bar * g.d12;
  r.q_eps = r.q0 + std::sqrt(mp.eps) * mp.rho * r.q1;
  if (is_call) {
    const double k = payoff.strike();
    r.implied_vol_asymptotic = implied_vol_asymptotic(mp, gp, x, k, t);
    try {
      r.implied_vol_inverted = implied_vol_invert(r.q_eps, x, k, tau);
    } catch (const DomainError&) {
      r.implied_vol_inverted = kNaN;
    }
  } else {
    r.implied_vol_inverted = r.implied_vol_asymptotic = kNaN;
  }
  return r;
}

double implied_vol_invert(double price, double x, double strike, double tau) {
  if (!(x > 0.0 && strike > 0.0 && tau > 0.0))
    throw DomainError("implied_vol_invert: spot, strike and tau must be > 0");
  const double lower = std::max(x - strike, 0.0);
  if (!(price > lower)) throw DomainError("implied_vol_invert: price at or below intrinsic value (x-K)^+");
  if (!(price < x)) throw DomainError("implied_vol_invert: price at or above the spot upper bound");

  auto f = [&](double s) { return call_greeks(x, strike, s * s * tau).price - price; };
  double lo = 0.0, hi = 0.5;
  while (f(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e4) throw NumericalError("implied_vol_invert: no bracket below sigma = 1e4");
  }
  const double tol = 1e-12 * x;
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const auto g = call_greeks(x, strike, s * s * tau);
    const double res = g.price - price;
    if (std::abs(res) < tol) return s;
    if (res < 0.0) lo = s; else hi = s;
    const double vega = g.d2 * s * tau;  // x phi(d1) sqrt(tau)
    double next = vega > 0.0 ? s - res / vega : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * hi) return next;
    s = next;
  }
  throw NumericalError("implied_vol_invert: no convergence");
}

double implied_vol_asymptotic(const ModelParams& mp, const GroupParams& gp, double x,
                              double strike, double t) {
  const double tau = mp.maturity - t;
  if (!(tau > 0.0)) throw DomainError("implied_vol_asymptotic: need t < T");
  const double sb = gp.sigma_bar;
  return sb + std::sqrt(mp.eps) * mp.rho * gp.d_bar *
                  (0.5 / sb + std::log(strike / x) / (sb * sb * sb * tau));
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::FastMeanReverting: return "fast";
    case Regime::SlowMeanReverting: return "slow";
    case Regime::SmallAmplitude: return "small_amplitude";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  if (s == "fast") return Regime::FastMeanReverting;
  if (s == "slow") return Regime::SlowMeanReverting;
  if (s == "small_amplitude") return Regime::SmallAmplitude;
  throw ConfigError("regime", "expected fast, slow or small_amplitude, got '" + s + "'");
}

double zeta_exponent(double h, Regime regime) {
  if (!(h > 0.0 && h < 1.0)) throw DomainError("zeta_exponent: h must lie in (0, 1)");
  switch (regime) {
    case Regime::SlowMeanReverting: return h + 0.5;
    case Regime::FastMeanReverting: return std::max(h - 0.5, 0.0);
    case Regime::SmallAmplitude: break;
  }
  throw DomainError("zeta_exponent: the small-amplitude regime uses term_structure_factor");
}

double term_structure_factor(double tau, const TermStructureParams& ts, double h) {
  if (!(tau > 0.0 && ts.tau_mr > 0.0 && ts.tau_bar > 0.0))
    throw DomainError("term_structure_factor: tau, tau_mr and tau_bar must be > 0");
  if (!(h > 0.0 && h < 1.0)) throw DomainError("term_structure_factor: h must lie in (0, 1)");
  const double r = tau / ts.tau_mr, p = h + 1.5;
  // 1 - int_0^r e^{-v}(1 - v/r)^p dv = e^{-r} + int_0^r e^{-v}[1 - (1 - v/r)^p] dv
  auto g = [&](double v) { return -std::exp(-v) * std::expm1(p * std::log1p(-v / r)); };
  const double upper = std::min(r, 60.0);
  double brace = std::exp(-r);
  if (upper > 0.0) {
    const auto res = quad::integrate(g, 0.0, upper, 1e-300, 1e-13);
    brace += res.value;
  }
  return std::pow(tau / ts.tau_bar, h + 0.5) * brace;
}

double implied_vol_general(double sigma_tT, double delta_sigma, double tau, double tau_bar,
                           double zeta, double log_moneyness) {
  const double ratio = tau / tau_bar;
  return sigma_tT + delta_sigma * (std::pow(ratio, zeta) + std::pow(ratio, zeta - 1.0) * log_moneyness);
}

}  // namespace roughvol
