#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "roughvol/error.hpp"
#include "roughvol/experiments.hpp"
#include "roughvol/gaussfunc.hpp"
#include "roughvol/kernel.hpp"
#include "roughvol/pricing.hpp"
#include "roughvol/simulate.hpp"

namespace roughvol::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Report new_report(const std::string& command, const RunConfig& cfg) {
  return Report(command, config_hash(cfg), cfg.mc.seed);
}

void echo_model(Report& r, const ModelParams& mp) {
  r.set("hurst", mp.hurst.value());
  r.set("eps", mp.eps);
  r.set("rho", mp.rho);
  r.set("x0", mp.x0);
  r.set("maturity", mp.maturity);
  r.set("vol_family", mp.vol_fn.family_name());
}

void add_group(Report& r, const GroupParams& gp) {
  r.set("sigma_bar", gp.sigma_bar);
  r.set("d_bar", gp.d_bar);
  r.set("tau_bar", gp.tau_bar);
}

Report study_convergence(const RunConfig& cfg) {
  Report r = new_report("study convergence", cfg);
  const ModelParams mp = cfg.model_params(cfg.study.eps_grid.front());
  const Payoff payoff = cfg.make_payoff();
  const MCOptions opt = cfg.mc_options();
  const ConvergenceReport rep =
      convergence_study(mp, cfg.study.eps_grid, payoff, cfg.mc.paths, cfg.mc.seed, opt);

  echo_model(r, mp);
  r.set("payoff", payoff.name());
  r.set("variant", cfg.mc.variant);
  r.set("n_paths", cfg.mc.paths);
  r.set("common_random_numbers", rep.common_random_numbers);
  r.set("monotone_scaled_error", rep.monotone);
  r.set("all_conclusive", rep.all_conclusive);
  r.set("all_beat_bs", rep.all_beat_bs);
  r.set("rate_fit_error", rep.rate_fit_error);
  r.set("rate_fit_scaled_error", rep.rate_fit_scaled_error);
  if (!rep.limitation.empty()) r.note(rep.limitation);

  Table& t = r.table("", {"eps", "n_steps", "mc_mean", "mc_se", "mc_raw_mean", "mc_raw_se", "q0", "q1",
                          "q_eps", "q_finite_horizon", "error", "error_bs", "scaled_error", "scaled_se",
                          "inconclusive", "beats_bs", "interior_mean", "interior_se", "interior_scaled"});
  for (const auto& p : rep.points)
    t.add({p.eps, static_cast<long>(p.n_steps), p.mc.mean, p.mc.std_error, p.mc.raw_mean,
           p.mc.raw_std_error, p.q0, p.q1, p.q_eps, p.q_finite_horizon, p.error, p.error_bs,
           p.scaled_error, p.scaled_se, p.inconclusive, p.beats_bs, p.interior.mean,
           p.interior.std_error, p.interior_scaled});
  return r;
}

Report study_vartheta(const RunConfig& cfg) {
  Report r = new_report("study vartheta", cfg);
  const ModelParams mp = cfg.model_params(cfg.study.vartheta_eps);
  const VarthetaReport v = vartheta_check(mp, cfg.study.lemma_paths, cfg.mc.seed);
  echo_model(r, mp);
  r.set("n_paths", v.n_paths);
  r.set("mean_scaled", v.mean_scaled);
  r.set("se_scaled", v.se_scaled);
  r.set("d_bar", v.d_bar);
  r.set("d_bar_horizon", v.d_bar_horizon);
  r.set("rel_dev_d_bar", v.rel_dev_d_bar);
  r.set("rel_dev_horizon", v.rel_dev_horizon);
  r.set("bound", v.bound);
  r.set("max_abs", v.max_abs);
  r.set("violations", v.violations);
  r.note("d_bar_horizon is the coefficient with the kernel integral truncated at T/eps");
  return r;
}

Report study_rate(const RunConfig& cfg, const std::string& which) {
  Report r = new_report("study " + which, cfg);
  const ModelParams mp = cfg.model_params();
  const RateReport rep =
      which == "phi"
          ? phi_variance_check(mp, cfg.study.phi_eps_grid, cfg.study.lemma_paths, cfg.mc.seed)
          : kappa_check(mp, cfg.study.kappa_eps_grid, cfg.study.lemma_paths, cfg.mc.seed,
                        cfg.mc_options());
  echo_model(r, mp);
  r.set("statistic", rep.statistic);
  r.set("n_paths", cfg.study.lemma_paths);
  r.set("slope", rep.slope);
  r.set("slope_se", rep.slope_se);
  r.set("slope_prediction", rep.slope_prediction);
  r.set("target", rep.target);
  Table& t = r.table("", {"eps", "mean", "mean_se", "second_moment", "second_moment_se", "prediction",
                          "t_at_sup"});
  for (const auto& p : rep.points)
    t.add({p.eps, p.mean, p.mean_se, p.second, p.second_se, p.prediction, p.t_at_sup});
  return r;
}

Report study_smile(const RunConfig& cfg) {
  Report r = new_report("study smile", cfg);
  const ModelParams mp = cfg.model_params(cfg.study.smile_eps);
  const GroupParams gp = group_params(mp);
  const double t0 = cfg.mc.t;
  const double tau = mp.maturity - t0;
  if (!(tau > 0.0)) throw ConfigError("mc.t", "smile study needs t < maturity");
  echo_model(r, mp);
  add_group(r, gp);

  const int n = cfg.study.smile_points;
  const double half = cfg.study.smile_log_moneyness;
  std::vector<double> m, iv;
  Table& t = r.table("", {"log_moneyness", "strike", "q0", "q_eps", "iv_inverted", "iv_asymptotic",
                          "iv_difference"});
  for (int i = 0; i < n; ++i) {
    const double lm = -half + 2.0 * half * i / (n - 1);
    const double k = mp.x0 * std::exp(lm);
    const PriceResult p = corrected_price(mp, gp, Payoff::call(k), t0);
    t.add({lm, k, p.q0, p.q_eps, p.implied_vol_inverted, p.implied_vol_asymptotic,
           p.implied_vol_inverted - p.implied_vol_asymptotic});
    if (std::isfinite(p.implied_vol_inverted)) {
      m.push_back(lm);
      iv.push_back(p.implied_vol_inverted);
    }
  }
  // ordinary least squares of iv on log-moneyness
  double slope = kNaN;
  if (m.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < m.size(); ++i) mx += m[i], my += iv[i];
    mx /= m.size();
    my /= m.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      sxy += (m[i] - mx) * (iv[i] - my);
      sxx += (m[i] - mx) * (m[i] - mx);
    }
    slope = sxy / sxx;
  }
  const double scale = std::sqrt(mp.eps) * mp.rho;
  const double recovered = scale != 0.0 ? slope * std::pow(gp.sigma_bar, 3) * tau / scale : kNaN;
  r.set("fitted_slope", slope);
  r.set("d_bar_from_slope", recovered);
  r.set("d_bar_rel_dev", std::abs(recovered - gp.d_bar) / std::abs(gp.d_bar));
  if (scale == 0.0) r.note("rho = 0: the smile is flat and the slope carries no D-bar information");

  // expansion error across the convergence grid, max over the same strikes
  Table& e = r.table("eps", {"eps", "max_abs_difference", "scaled_difference", "atm_difference"});
  std::vector<double> scaled;
  for (double eps : cfg.study.eps_grid) {
    const ModelParams me = cfg.model_params(eps);
    const GroupParams ge = group_params(me);
    double worst = 0.0, atm = kNaN;
    for (int i = 0; i < n; ++i) {
      const double lm = -half + 2.0 * half * i / (n - 1);
      const PriceResult p = corrected_price(me, ge, Payoff::call(me.x0 * std::exp(lm)), t0);
      const double d = std::abs(p.implied_vol_inverted - p.implied_vol_asymptotic);
      if (!std::isfinite(d)) throw NumericalError("implied volatility inversion failed at eps = " +
                                                  std::to_string(eps));
      worst = std::max(worst, d);
      if (2 * i == n - 1) atm = d;
    }
    scaled.push_back(worst / std::sqrt(eps));
    e.add({eps, worst, scaled.back(), atm});
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < scaled.size(); ++k) decreasing = decreasing && scaled[k] < scaled[k - 1];
  r.set("scaled_difference_decreasing", decreasing);
  return r;
}

Report study_termstructure(const RunConfig& cfg) {
  Report r = new_report("study termstructure", cfg);
  const ModelParams mp = cfg.model_params();
  const GroupParams gp = group_params(mp);
  const double h = mp.hurst.value();
  TermStructureParams ts;
  ts.regime = regime_from_string(cfg.study.ts_regime);
  ts.tau_mr = cfg.study.ts_tau_mr;
  ts.delta_sigma = cfg.study.ts_delta_sigma;
  ts.tau_bar = cfg.study.ts_tau_bar > 0.0 ? cfg.study.ts_tau_bar : gp.tau_bar;
  echo_model(r, mp);
  add_group(r, gp);
  r.set("regime", to_string(ts.regime));
  r.set("tau_mr", ts.tau_mr);
  r.set("tau_bar_used", ts.tau_bar);
  r.set("zeta_slow", zeta_exponent(h, Regime::SlowMeanReverting));
  r.set("zeta_fast", zeta_exponent(h, Regime::FastMeanReverting));
  double zeta = kNaN;
  try {
    zeta = zeta_exponent(h, ts.regime);
  } catch (const DomainError&) {
    r.note("small-amplitude regime has no single exponent; iv_general column left empty");
  }
  r.set("zeta", zeta);

  const int n = cfg.study.ts_points;
  const double lmin = std::log(cfg.study.ts_tau_min), lmax = std::log(cfg.study.ts_tau_max);
  std::vector<double> tau(n), a(n);
  for (int i = 0; i < n; ++i) {
    tau[i] = std::exp(lmin + (lmax - lmin) * i / (n - 1));
    a[i] = term_structure_factor(tau[i], ts, h);
  }
  std::vector<double> xs, ys, xl, yl;
  Table& t = r.table("", {"tau", "tau_over_tau_mr", "A", "local_slope", "iv_general_atm"});
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(i - 1, 0), hi = std::min(i + 1, n - 1);
    const double local = std::log(a[hi] / a[lo]) / std::log(tau[hi] / tau[lo]);
    const double iv = std::isfinite(zeta)
                          ? implied_vol_general(gp.sigma_bar, ts.delta_sigma, tau[i], ts.tau_bar, zeta, 0.0)
                          : kNaN;
    t.add({tau[i], tau[i] / ts.tau_mr, a[i], local, iv});
    if (tau[i] <= 1e-2 * ts.tau_mr) xs.push_back(tau[i]), ys.push_back(a[i]);
    if (tau[i] >= 1e2 * ts.tau_mr) xl.push_back(tau[i]), yl.push_back(a[i]);
  }
  const double s_short = xs.size() >= 2 ? loglog_slope(xs, ys).first : kNaN;
  const double s_long = xl.size() >= 2 ? loglog_slope(xl, yl).first : kNaN;
  r.set("slope_short", s_short);
  r.set("slope_short_target", h + 0.5);
  r.set("slope_long", s_long);
  r.set("slope_long_target", h - 0.5);
  r.note("slope_short fits tau <= 0.01 tau_mr, slope_long fits tau >= 100 tau_mr");
  return r;
}

}  // namespace

Report cmd_params(const RunConfig& cfg) {
  Report r = new_report("params", cfg);
  const ModelParams mp = cfg.model_params();
  const GroupParams gp = group_params(mp);
  const KernelEval ke(mp.hurst);
  echo_model(r, mp);
  add_group(r, gp);
  r.set("mean_F", gp.mean_F);
  r.set("mean_F2", gp.mean_F2);
  r.set("var_F", gp.var_F);
  r.set("mean_Fp", gp.mean_Fp);
  r.set("mean_Fp2", gp.mean_Fp2);
  r.set("sigma_ou", ke.sigma_ou());
  r.set("kernel_l2_norm_squared", ke.l2_norm_squared());
  r.set("kernel_l1_norm", ke.l1_norm());
  r.set("d_bar_abs_error", gp.d_bar_abs_error);
  r.set("d_bar_tail", gp.d_bar_tail);
  r.set("d_bar_bound", ke.sigma_ou() * mp.vol_fn.sup_abs() * mp.vol_fn.sup_abs_f_fprime() * ke.l1_norm());
  r.set("gauss_rule", gp.gauss_rule);
  return r;
}

Report cmd_price(const RunConfig& cfg) {
  Report r = new_report("price", cfg);
  const ModelParams mp = cfg.model_params();
  const GroupParams gp = group_params(mp);
  const Payoff payoff = cfg.make_payoff();
  const PriceResult p = corrected_price(mp, gp, payoff, cfg.mc.t);
  echo_model(r, mp);
  add_group(r, gp);
  r.set("payoff", payoff.name());
  r.set("t", cfg.mc.t);

  Table& t = r.table("", {"t", "q0", "q1", "q_eps", "d2", "d12", "iv_inverted", "iv_asymptotic",
                          "mc_mean", "mc_se", "mc_minus_q_eps", "mc_z_score"});
  double mc_mean = kNaN, mc_se = kNaN;
  if (cfg.mc.t == 0.0) {
    const MCEstimate mc = mc_price(mp, payoff, cfg.mc.paths, cfg.mc.seed, cfg.mc_options());
    mc_mean = mc.mean;
    mc_se = mc.std_error;
    r.set("n_paths", mc.n_paths);
    r.set("mc_raw_mean", mc.raw_mean);
    r.set("mc_raw_se", mc.raw_std_error);
  } else {
    r.note("Monte Carlo runs at t = 0 only; mc columns left empty");
  }
  const double diff = mc_mean - p.q_eps;
  t.add({cfg.mc.t, p.q0, p.q1, p.q_eps, p.d2, p.d12, p.implied_vol_inverted, p.implied_vol_asymptotic,
         mc_mean, mc_se, diff, mc_se > 0.0 ? diff / mc_se : kNaN});
  return r;
}

Report cmd_simulate(const RunConfig& cfg, const fs::path& dir) {
  Report r = new_report("simulate", cfg);
  const ModelParams mp = cfg.model_params();
  const SimGrid grid = cfg.sim_grid(mp);
  const MCOptions opt = cfg.mc_options();
  const PathSimulator sim(mp, grid, opt.variant, opt.z0);
  auto ws = sim.make_workspace();
  echo_model(r, mp);
  r.set("variant", cfg.mc.variant);
  r.set("scheme", to_string(grid.scheme));
  r.set("n_steps", static_cast<long>(grid.n_steps));
  r.set("dt", grid.dt);
  r.set("warmup_horizon", grid.warmup_horizon);
  r.set("dump_paths", static_cast<long>(cfg.simulate.dump_paths));

  fs::create_directories(dir / "paths");
  const std::string header = r.header_text();
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  Table& t = r.table("", {"path", "file", "Z_T", "sigma_T", "X_T"});
  PathBundle p;
  for (int i = 0; i < cfg.simulate.dump_paths; ++i) {
    sim.simulate(cfg.mc.seed, static_cast<std::uint64_t>(i), false, p, *ws);
    char name[32];
    std::snprintf(name, sizeof name, "path_%05d.csv", i);
    std::ofstream os(dir / "paths" / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write path file " + std::string(name));
    write_path_csv(os, p, header + "\npath: " + std::to_string(i));
    files.push_back(std::string("paths/") + name);
    t.add({static_cast<long>(i), std::string("paths/") + name, p.Z.back(), p.sigma.back(), p.X.back()});
  }
  nlohmann::ordered_json side = make_sidecar(cfg);
  side["paths"] = files;
  std::ofstream os(dir / "paths.json", std::ios::binary);
  os << side.dump(2) << '\n';
  return r;
}

Report cmd_study(const RunConfig& cfg, const std::string& which) {
  if (which == "convergence") return study_convergence(cfg);
  if (which == "vartheta") return study_vartheta(cfg);
  if (which == "phi" || which == "kappa") return study_rate(cfg, which);
  if (which == "smile") return study_smile(cfg);
  if (which == "termstructure") return study_termstructure(cfg);
  throw ConfigError("study", "unknown study '" + which + "'");
}

void emit(const Report& r, const RunConfig& cfg) {
  const fs::path dir(cfg.output.dir);
  fs::create_directories(dir);
  if (cfg.wants("csv")) r.write_csv(dir);
  if (cfg.wants("json")) r.write_json(dir);
  if (cfg.wants("txt")) r.write_text(dir);
  std::ofstream os(dir / "config.json", std::ios::binary);
  if (!os) throw std::runtime_error("cannot write config.json");
  os << make_sidecar(cfg).dump(2) << '\n';
}

}  // namespace roughvol::cli
