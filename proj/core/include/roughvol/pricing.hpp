#pragma once

#include <functional>
#include <string>
#include <variant>

#include "roughvol/gaussfunc.hpp"
#include "roughvol/model.hpp"

namespace roughvol {

struct Call {
  double strike = 100.0;
};

/// Bounded C-infinity ramp: the call spread K1 < K2 smoothed by a lognormal
/// kernel of log-standard deviation `width`,
///   h(x) = C(x; K1, width^2) - C(x; K2, width^2),
/// where C(x; K, v) is the zero-rate Black-Scholes call with total variance v.
/// Its Black-Scholes transition is closed form (variances add).
struct SmoothRamp {
  double k1 = 90.0;
  double k2 = 110.0;
  double width = 0.1;
};

/// User payoff with its first two derivatives. Prices use Gauss-Hermite
/// integration against the lognormal density.
struct SmoothCustom {
  std::function<double(double)> h, dh, d2h;
  std::string name = "custom";
};

class Payoff {
 public:
  using Kind = std::variant<Call, SmoothRamp, SmoothCustom>;

  /// Validates parameters. SmoothCustom derivatives are cross-checked by
  /// central differences at x_ref e^{k/4}, k = -4..4; throws ConfigError on
  /// mismatch.
  explicit Payoff(Kind kind, double x_ref = 100.0);

  static Payoff call(double strike) { return Payoff(Call{strike}); }
  static Payoff ramp(double k1, double k2, double width) { return Payoff(SmoothRamp{k1, k2, width}); }

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  bool is_smooth() const { return !std::holds_alternative<Call>(kind_); }
  const Kind& kind() const { return kind_; }
  std::string name() const;
  /// Strike of a call, NaN otherwise.
  double strike() const;

 private:
  Kind kind_;
};

/// Zero-rate Black-Scholes value and derivatives of Q0(x) = E[h(x e^{-v/2 + sqrt(v) Z})],
/// v = sigma^2 tau. d2 = x^2 Q0'' and d12 = x d/dx (x^2 Q0'').
struct BSGreeks {
  double price = 0.0;
  double delta = 0.0;
  double gamma = 0.0;
  double d2 = 0.0;
  double d12 = 0.0;
};

/// Gauss-Hermite order used for SmoothCustom payoffs.
inline constexpr int kPayoffGHOrder = 160;

double bs_price(double x, const Payoff& payoff, double sigma, double tau);

/// Full set at one point. Calls need tau > 0; smooth payoffs allow tau = 0.
BSGreeks bs_greeks(double x, const Payoff& payoff, double sigma, double tau);

struct OperatorGreeks {
  double d2 = 0.0;   // x^2 d^2/dx^2 Q0
  double d12 = 0.0;  // x d/dx (x^2 d^2/dx^2) Q0
};

/// Throws DomainError at tau = 0 (the operators are undefined at expiry for
/// kinked payoffs; the restriction is applied uniformly).
OperatorGreeks bs_operator_greeks(double x, const Payoff& payoff, double sigma, double tau);

struct PriceResult {
  double q0 = 0.0;
  double q1 = 0.0;  // (T - t) D-bar d12, before the sqrt(eps) rho factor
  double q_eps = 0.0;
  double implied_vol_inverted = 0.0;    // NaN unless the payoff is a call
  double implied_vol_asymptotic = 0.0;  // NaN unless the payoff is a call
  double d2 = 0.0;
  double d12 = 0.0;
};

/// First-order corrected price at time t and spot x (default: mp.x0):
/// q_eps = q0 + sqrt(eps) rho q1. At t = T returns h(x) with q1 = 0.
PriceResult corrected_price(const ModelParams& mp, const GroupParams& gp, const Payoff& payoff,
                            double t, double x = -1.0);

/// Black-Scholes implied volatility of a call price. Throws DomainError when
/// the price is not strictly between (x - K)^+ and x, naming the bound.
double implied_vol_invert(double price, double x, double strike, double tau);

/// sigma_bar + sqrt(eps) rho D-bar [1/(2 sigma_bar) + log(K/x)/(sigma_bar^3 (T - t))].
double implied_vol_asymptotic(const ModelParams& mp, const GroupParams& gp, double x,
                              double strike, double t);

enum class Regime { FastMeanReverting, SlowMeanReverting, SmallAmplitude };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct TermStructureParams {
  Regime regime = Regime::SmallAmplitude;
  double tau_mr = 1.0;
  double delta_sigma = 0.01;
  double tau_bar = 50.0;
};

/// Term-structure exponent for 0 < h < 1: slow h + 1/2, fast max(h - 1/2, 0).
/// The small-amplitude regime has no single exponent (DomainError).
double zeta_exponent(double h, Regime regime);

/// A(tau/tau_bar, tau/tau_mr) = (tau/tau_bar)^{h+1/2}
///   {1 - int_0^{tau/tau_mr} e^{-v} (1 - v tau_mr/tau)^{h+3/2} dv}.
double term_structure_factor(double tau, const TermStructureParams& ts, double h);

/// Reporting form sigma_tT + dsigma [(tau/tau_bar)^zeta + (tau/tau_bar)^{zeta-1} log(K/x)].
double implied_vol_general(double sigma_tT, double delta_sigma, double tau, double tau_bar,
                           double zeta, double log_moneyness);

}  // namespace roughvol
