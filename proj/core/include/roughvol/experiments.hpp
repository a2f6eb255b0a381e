#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roughvol/gaussfunc.hpp"
#include "roughvol/model.hpp"
#include "roughvol/pricing.hpp"
#include "roughvol/simulate.hpp"

namespace roughvol {

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_paths = 0;
  std::uint64_t seed = 0;
  double raw_mean = 0.0;       // antithetic estimate without control variates
  double raw_std_error = 0.0;
};

/// Monte Carlo settings shared by the pricing studies.
struct MCOptions {
  bool antithetic = true;
  /// Regression on mean-zero controls built from the Black-Scholes hedge at
  /// sigma_bar: delta-hedge gains, gamma-weighted squared-return surprises,
  /// and sum_i (sigma_i^2 - E sigma_i^2) dt. All have known zero mean under
  /// the simulated law, so the estimator stays unbiased up to O(1/n).
  bool control_variates = true;
  double dt_over_eps = 1.0 / 16.0;
  double warmup_over_eps = 20.0;
  int exact_cells = 2;
  Variant variant = Variant::Stationary;
  double z0 = 0.0;  // Riemann-Liouville start value
  std::size_t block_pairs = 128;
};

/// Price of the payoff at t = 0 by simulation.
MCEstimate mc_price(const ModelParams& mp, const Payoff& payoff, long n_paths, std::uint64_t seed,
                    const MCOptions& opt = {});

struct ConvergencePoint {
  double eps = 0.0;
  int n_steps = 0;
  MCEstimate mc;
  double q0 = 0.0, q1 = 0.0, q_eps = 0.0;
  double error = 0.0;         // |mc - q_eps|
  double error_bs = 0.0;      // |mc - q0|
  double scaled_error = 0.0;  // error / sqrt(eps)
  double scaled_se = 0.0;     // std_error / sqrt(eps)
  bool inconclusive = false;  // error not resolved above 2 standard errors
  bool beats_bs = false;      // error < error_bs
  /// Interior time T/2: mean of h(X_T) - Q^eps_{T/2}(X_{T/2}) (tower property),
  /// a lower bound on the L2 pricing error at that time.
  MCEstimate interior;
  double interior_scaled = 0.0;
  /// Finite-horizon first-order prediction q0 + sqrt(eps) rho d12 int_0^T D_{(T-t)/eps} dt.
  double q_finite_horizon = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergencePoint> points;
  bool common_random_numbers = false;
  double rate_fit_error = 0.0;         // slope of log error vs log eps
  double rate_fit_scaled_error = 0.0;  // slope of log scaled error vs log eps
  /// No consecutive pair where the scaled error increases beyond the
  /// 1-SE overlap of both points.
  bool monotone = false;
  bool all_conclusive = false;
  bool all_beat_bs = false;
  std::string limitation;
};

/// eps_grid: strictly decreasing dyadic (ratio 2), at least 4 points. With
/// dyadic eps and a fixed dt/eps, every level's Brownian increments are sums
/// of one shared fine-grid path (common random numbers).
ConvergenceReport convergence_study(const ModelParams& mp_base, const std::vector<double>& eps_grid,
                                    const Payoff& payoff, long n_paths, std::uint64_t seed,
                                    const MCOptions& opt = {});

// ---- conditional-expectation statistics at t = 0 --------------------------

struct LemmaOptions {
  int s_nodes_per_panel = 8;    // Gauss-Legendre nodes per s-panel
  double past_ratio = 1.08;     // growth of past cell widths
  double past_horizon_over_T = 50.0;
  int gh_order = 24;
  std::size_t block = 64;
};

struct VarthetaReport {
  double eps = 0.0;
  long n_paths = 0;
  double mean_scaled = 0.0;   // mean(sigma_0 theta_0) / sqrt(eps)
  double se_scaled = 0.0;
  double d_bar = 0.0;
  double d_bar_horizon = 0.0;  // finite-horizon coefficient with U = T/eps
  double rel_dev_d_bar = 0.0;  // |mean_scaled - d_bar| / |d_bar|
  double rel_dev_horizon = 0.0;
  double bound = 0.0;          // K_T sqrt(eps)
  double max_abs = 0.0;        // max_path |sigma_0 theta_0|
  long violations = 0;
};

/// sigma_0 theta_0 with theta_0 = sigma_ou int_0^T E[G'(Z_s)|F_0] K^eps(s) ds.
VarthetaReport vartheta_check(const ModelParams& mp, long n_paths, std::uint64_t seed,
                              const LemmaOptions& opt = {});

struct RatePoint {
  double eps = 0.0;
  double mean = 0.0, mean_se = 0.0;            // E[stat]
  double second = 0.0, second_se = 0.0;        // E[stat^2] (sup over t for kappa)
  double prediction = 0.0;                     // deterministic reference, if any
  double t_at_sup = 0.0;
};

struct RateReport {
  std::string statistic;
  std::vector<RatePoint> points;
  double slope = 0.0;          // log second moment vs log eps
  double slope_se = 0.0;
  double slope_prediction = 0.0;  // same fit on the deterministic reference
  double target = 0.0;
};

/// phi_0 = int_0^T E[G(Z_s)|F_0] ds, G = (F^2 - sigma_bar^2)/2.
RateReport phi_variance_check(const ModelParams& mp, const std::vector<double>& eps_grid, long n_mc,
                              std::uint64_t seed, const LemmaOptions& opt = {});

/// kappa_t = (sqrt(eps)/2) int_0^t (sigma_s^2 - sigma_bar^2) ds on simulated paths.
RateReport kappa_check(const ModelParams& mp, const std::vector<double>& eps_grid, long n_mc,
                       std::uint64_t seed, const MCOptions& opt = {});

/// Least-squares slope of log y against log x with its standard error.
std::pair<double, double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace roughvol
