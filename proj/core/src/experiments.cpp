#include "roughvol/experiments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "roughvol/error.hpp"
#include "roughvol/kernel.hpp"
#include "roughvol/parallel.hpp"
#include "roughvol/quadrature.hpp"
#include "roughvol/rng.hpp"

namespace roughvol {
namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Mean of y minus the regression on zero-mean controls, with its standard
// error. Rows are i.i.d. samples.
std::pair<double, double> regress(const std::vector<double>& y, const Eigen::MatrixXd& c) {
  const Eigen::Index n = static_cast<Eigen::Index>(y.size());
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const double ybar = yv.mean();
  if (c.cols() == 0 || n < 2 * c.cols() + 4) {
    const double var = n > 1 ? (yv.array() - ybar).square().sum() / (n - 1) : 0.0;
    return {ybar, std::sqrt(var / n)};
  }
  const Eigen::RowVectorXd cbar = c.colwise().mean();
  const Eigen::MatrixXd cc = c.rowwise() - cbar;
  const Eigen::VectorXd yc = yv.array() - ybar;
  const Eigen::VectorXd beta = cc.colPivHouseholderQr().solve(yc);
  const double est = ybar - cbar.dot(beta);
  const Eigen::VectorXd res = yc - cc * beta;
  const double dof = static_cast<double>(n - c.cols() - 1);
  const double var = res.squaredNorm() / dof;
  return {est, std::sqrt(var / n)};
}

MCEstimate estimate(const std::vector<double>& y, const Eigen::MatrixXd& c, long n_paths,
                    std::uint64_t seed, bool use_controls) {
  MCEstimate e;
  e.n_paths = n_paths;
  e.seed = seed;
  const auto raw = regress(y, Eigen::MatrixXd(y.size(), 0));
  e.raw_mean = raw.first;
  e.raw_std_error = raw.second;
  if (use_controls) {
    const auto cv = regress(y, c);
    e.mean = cv.first;
    e.std_error = cv.second;
  } else {
    e.mean = raw.first;
    e.std_error = raw.second;
  }
  return e;
}

// Delta and gamma of the Black-Scholes price at sigma_bar along a time grid.
// Closed form for calls and ramps; a log-spot table for custom payoffs.
class HedgeGreeks {
 public:
  HedgeGreeks(const Payoff& payoff, double sigma_bar, double maturity, double dt, int n, double x0)
      : payoff_(payoff), sb_(sigma_bar), T_(maturity), dt_(dt) {
    if (!std::holds_alternative<SmoothCustom>(payoff.kind())) return;
    const double spread = 10.0 * sigma_bar * std::sqrt(maturity) + 1.0;
    lo_ = std::log(x0) - spread;
    const double hi = std::log(x0) + spread;
    step_ = (hi - lo_) / (kNodes - 1);
    table_.resize(static_cast<std::size_t>(n) * kNodes * 2);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < kNodes; ++k) {
        const auto g = bs_greeks(std::exp(lo_ + k * step_), payoff, sb_, T_ - i * dt_);
        table_[(static_cast<std::size_t>(i) * kNodes + k) * 2] = g.delta;
        table_[(static_cast<std::size_t>(i) * kNodes + k) * 2 + 1] = g.gamma;
      }
  }

  void at(int i, double x, double& delta, double& gamma) const {
    if (table_.empty()) {
      const auto g = bs_greeks(x, payoff_, sb_, T_ - i * dt_);
      delta = g.delta;
      gamma = g.gamma;
      return;
    }
    double pos = (std::log(x) - lo_) / step_;
    pos = std::clamp(pos, 0.0, static_cast<double>(kNodes - 1) - 1e-9);
    const int k = static_cast<int>(pos);
    const double w = pos - k;
    const double* row = &table_[(static_cast<std::size_t>(i) * kNodes + k) * 2];
    delta = (1 - w) * row[0] + w * row[2];
    gamma = (1 - w) * row[1] + w * row[3];
  }

 private:
  static constexpr int kNodes = 401;
  const Payoff& payoff_;
  double sb_, T_, dt_;
  double lo_ = 0.0, step_ = 1.0;
  std::vector<double> table_;
};

constexpr int kControls = 6;

struct Level {
  ModelParams mp;
  SimGrid grid;
  std::unique_ptr<PathSimulator> sim;
  std::unique_ptr<HedgeGreeks> greeks;
  int stride = 1;  // fine cells per level cell
  std::vector<double> mean_sigma2;
  double d2_bar = 0.0;  // E[X_t^2 Gamma_t] under the sigma_bar dynamics
  int mid = 0;
  double t_mid = 0.0;
  std::uint64_t noise_seed = 0;
  // per-pair outputs
  std::vector<double> y_price, y_interior;
  Eigen::MatrixXd controls;
};

// E[F(Z_i)^2] for each grid index under the scheme's marginal law.
std::vector<double> marginal_sigma2(const Level& lv, const GroupParams& gp, const MCOptions& opt) {
  const int n = lv.grid.n_steps;
  std::vector<double> out(n + 1, gp.sigma_bar * gp.sigma_bar);
  if (opt.variant == Variant::Stationary) return out;
  const auto& ke = lv.sim->kernel();
  const auto& rule = quad::cached_gauss_hermite_normal(48);
  const double h = lv.grid.dt / lv.mp.eps;
  double head = 0.0;
  for (int i = 0; i <= n; ++i) {
    if (i > 0) head += ke.lagged_product((i - 1) * h, i * h, 0.0);
    const double sd = ke.sigma_ou() * std::sqrt(head);
    const double m = opt.z0 * std::exp(-i * h);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double f = lv.mp.vol_fn.value(m + sd * rule.nodes[q]);
      acc += rule.weights[q] * f * f;
    }
    out[i] = acc;
  }
  return out;
}

struct PathStats {
  double price, interior;
  double c[kControls];
};

PathStats path_stats(const Level& lv, const Payoff& payoff, const GroupParams& gp,
                     const PathBundle& p) {
  const int n = lv.grid.n_steps;
  const double dt = lv.grid.dt;
  PathStats s{};
  s.price = payoff.value(p.X[n]);
  const double tau_mid = lv.mp.maturity - lv.t_mid;
  const auto gm = bs_greeks(p.X[lv.mid], payoff, gp.sigma_bar, tau_mid);
  const double q_mid = gm.price + std::sqrt(lv.mp.eps) * lv.mp.rho * tau_mid * gp.d_bar * gm.d12;
  s.interior = s.price - q_mid;
  for (int i = 0; i < n; ++i) {
    double delta, gamma;
    lv.greeks->at(i, p.X[i], delta, gamma);
    const double x = p.X[i], ret = p.X[i + 1] / x - 1.0, s2 = p.sigma[i] * p.sigma[i];
    const int half = i < lv.mid ? 0 : 1;
    s.c[0 + half] += delta * (p.X[i + 1] - x);
    s.c[2 + half] += 0.5 * gamma * x * x * (ret * ret - std::expm1(s2 * dt));
    s.c[4 + half] += 0.5 * lv.d2_bar * (s2 - lv.mean_sigma2[i]) * dt;
  }
  return s;
}

double horizon_integral(const ModelParams& mp) {
  // int_0^T D_{tau/eps} dtau on tau = T w^2 (D_U ~ U^{H+1/2} near 0).
  const KernelEval ke(mp.hurst);
  const CovarianceEval ce(mp.hurst);
  const auto& gl = quad::cached_gauss_legendre(12);
  double acc = 0.0;
  for (std::size_t q = 0; q < gl.size(); ++q) {
    const double w = 0.5 * (gl.nodes[q] + 1.0);
    const double tau = mp.maturity * w * w;
    if (tau <= 0.0) continue;
    acc += 0.5 * gl.weights[q] * 2.0 * mp.maturity * w *
           d_bar_detailed(mp.vol_fn, ke, ce, 40, tau / mp.eps).value;
  }
  return acc;
}

// Simulates all levels on shared Brownian paths when the grids nest.
bool run_levels(std::vector<Level>& levels, const Payoff& payoff, const GroupParams& gp,
                long n_paths, std::uint64_t seed, const MCOptions& opt) {
  const long n_pairs = opt.antithetic ? (n_paths + 1) / 2 : n_paths;
  const int reps = opt.antithetic ? 2 : 1;

  // Finest grid and nesting check.
  std::size_t fine = 0;
  for (std::size_t l = 1; l < levels.size(); ++l)
    if (levels[l].grid.dt < levels[fine].grid.dt) fine = l;
  const double dt_f = levels[fine].grid.dt;
  bool crn = true;
  int n_f = levels[fine].grid.n_steps, past_f = 0;
  for (auto& lv : levels) {
    const double r = lv.grid.dt / dt_f;
    lv.stride = static_cast<int>(std::lround(r));
    if (std::abs(r - lv.stride) > 1e-9 * r || lv.stride * lv.grid.n_steps != n_f) crn = false;
    past_f = std::max(past_f, lv.sim->warmup_cells() * lv.stride);
  }

  for (auto& lv : levels) {
    lv.y_price.assign(n_pairs, 0.0);
    lv.y_interior.assign(n_pairs, 0.0);
    lv.controls = Eigen::MatrixXd::Zero(n_pairs, kControls);
  }

  const unsigned workers = worker_count();
  struct WorkerState {
    std::vector<PathSimulator::WorkspacePtr> ws;
    PathBundle bundle;
    std::vector<double> wf, bf, dw, db;
  };
  std::vector<WorkerState> state(workers);
  for (auto& st : state)
    for (auto& lv : levels) st.ws.push_back(lv.sim->make_workspace());

  parallel_blocks(static_cast<std::size_t>(n_pairs), opt.block_pairs,
                  [&](std::size_t begin, std::size_t end, unsigned w) {
    auto& st = state[w];
    for (std::size_t pair = begin; pair < end; ++pair) {
      for (int rep = 0; rep < reps; ++rep) {
        const double sign = rep == 0 ? 1.0 : -1.0;
        if (crn) {
          NormalStream sw(seed, pair, 0), sb(seed, pair, 1);
          const double sdt = std::sqrt(dt_f);
          st.wf.resize(past_f + n_f);
          for (int c = 0; c < past_f + n_f; ++c) st.wf[c] = sign * sdt * sw.at(c - past_f);
          st.bf.resize(n_f);
          for (int c = 0; c < n_f; ++c) st.bf[c] = sign * sdt * sb.at(c);
        }
        for (std::size_t l = 0; l < levels.size(); ++l) {
          auto& lv = levels[l];
          if (crn) {
            const int L = lv.sim->warmup_cells(), n = lv.grid.n_steps, k = lv.stride;
            st.dw.assign(L + n, 0.0);
            for (int j = -L; j < n; ++j) {
              double acc = 0.0;
              for (int r = 0; r < k; ++r) acc += st.wf[past_f + j * k + r];
              st.dw[j + L] = acc;
            }
            st.db.assign(n, 0.0);
            for (int j = 0; j < n; ++j) {
              double acc = 0.0;
              for (int r = 0; r < k; ++r) acc += st.bf[j * k + r];
              st.db[j] = acc;
            }
            lv.sim->simulate_driven(st.dw, st.db, lv.noise_seed, pair, sign, st.bundle, *st.ws[l]);
          } else {
            lv.sim->simulate(lv.noise_seed, 2 * pair + rep, opt.antithetic, st.bundle, *st.ws[l]);
          }
          const auto s = path_stats(lv, payoff, gp, st.bundle);
          lv.y_price[pair] += s.price / reps;
          lv.y_interior[pair] += s.interior / reps;
          for (int c = 0; c < kControls; ++c) lv.controls(pair, c) += s.c[c] / reps;
        }
      }
    }
  });
  return crn;
}

Level make_level(const ModelParams& mp, const Payoff& payoff, const GroupParams& gp,
                 const MCOptions& opt, std::size_t index, std::uint64_t seed) {
  Level lv;
  lv.mp = mp;
  lv.grid = SimGrid::for_model(mp, opt.dt_over_eps, opt.warmup_over_eps);
  lv.grid.exact_cells = opt.exact_cells;
  if (opt.variant == Variant::RiemannLiouville && !std::isfinite(opt.z0))
    throw ConfigError("z0", "must be finite");
  lv.sim = std::make_unique<PathSimulator>(mp, lv.grid, opt.variant, opt.z0);
  lv.greeks = std::make_unique<HedgeGreeks>(payoff, gp.sigma_bar, mp.maturity, lv.grid.dt,
                                            lv.grid.n_steps, mp.x0);
  lv.mean_sigma2 = marginal_sigma2(lv, gp, opt);
  lv.d2_bar = bs_greeks(mp.x0, payoff, gp.sigma_bar, mp.maturity).d2;
  lv.mid = lv.grid.n_steps / 2;
  lv.t_mid = lv.mid * lv.grid.dt;
  lv.noise_seed = mix_seed(seed, 1000 + index);
  return lv;
}

void check_payoff_maturity(const Payoff& payoff, const ModelParams& mp) {
  (void)payoff;
  if (!(mp.maturity > 0.0)) throw ConfigError("maturity", "must be > 0");
}

}  // namespace

MCEstimate mc_price(const ModelParams& mp, const Payoff& payoff, long n_paths, std::uint64_t seed,
                    const MCOptions& opt) {
  mp.validate();
  if (n_paths <= 0) throw ConfigError("n_paths", "must be > 0");
  check_payoff_maturity(payoff, mp);
  const auto gp = group_params(mp);
  std::vector<Level> levels;
  levels.push_back(make_level(mp, payoff, gp, opt, 0, seed));
  run_levels(levels, payoff, gp, n_paths, seed, opt);
  return estimate(levels[0].y_price, levels[0].controls, n_paths, seed, opt.control_variates);
}

ConvergenceReport convergence_study(const ModelParams& mp_base, const std::vector<double>& eps_grid,
                                    const Payoff& payoff, long n_paths, std::uint64_t seed,
                                    const MCOptions& opt) {
  mp_base.validate();
  if (n_paths <= 0) throw ConfigError("n_paths", "must be > 0");
  if (eps_grid.size() < 4) throw ConfigError("eps_grid", "needs at least 4 points");
  for (std::size_t k = 1; k < eps_grid.size(); ++k) {
    if (!(eps_grid[k] < eps_grid[k - 1])) throw ConfigError("eps_grid", "must be strictly decreasing");
    if (std::abs(eps_grid[k - 1] / eps_grid[k] - 2.0) > 1e-9)
      throw ConfigError("eps_grid", "must be dyadic (consecutive ratio 2)");
  }
  std::vector<Level> levels;
  std::vector<GroupParams> gps;
  const auto gp = group_params(mp_base);  // eps-independent
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    ModelParams mp = mp_base;
    mp.eps = eps_grid[k];
    levels.push_back(make_level(mp, payoff, gp, opt, k, seed));
  }
  ConvergenceReport rep;
  rep.common_random_numbers = run_levels(levels, payoff, gp, n_paths, seed, opt);
  rep.limitation =
      "The supremum over t in [0, T] is probed at t = 0 (L2 error of the price) and at t = T/2 "
      "through the mean of h(X_T) - Q^eps_{T/2}(X_{T/2}), which only bounds the L2 error from below.";

  rep.monotone = rep.all_conclusive = rep.all_beat_bs = true;
  std::vector<double> eps_v, err_v, sc_v;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    auto& lv = levels[k];
    ConvergencePoint pt;
    pt.eps = lv.mp.eps;
    pt.n_steps = lv.grid.n_steps;
    pt.mc = estimate(lv.y_price, lv.controls, n_paths, seed, opt.control_variates);
    pt.interior = estimate(lv.y_interior, lv.controls, n_paths, seed, opt.control_variates);
    const auto pr = corrected_price(lv.mp, gp, payoff, 0.0);
    pt.q0 = pr.q0;
    pt.q1 = pr.q1;
    pt.q_eps = pr.q_eps;
    const double se = std::sqrt(pt.eps);
    pt.error = std::abs(pt.mc.mean - pt.q_eps);
    pt.error_bs = std::abs(pt.mc.mean - pt.q0);
    pt.scaled_error = pt.error / se;
    pt.scaled_se = pt.mc.std_error / se;
    pt.interior_scaled = std::abs(pt.interior.mean) / se;
    pt.inconclusive = pt.error < 2.0 * pt.mc.std_error;
    pt.beats_bs = pt.error < pt.error_bs;
    pt.q_finite_horizon = pr.q0 + se * lv.mp.rho * pr.d12 * horizon_integral(lv.mp);
    rep.all_conclusive = rep.all_conclusive && !pt.inconclusive;
    rep.all_beat_bs = rep.all_beat_bs && pt.beats_bs;
    if (!rep.points.empty()) {
      const auto& prev = rep.points.back();
      if (pt.scaled_error - pt.scaled_se > prev.scaled_error + prev.scaled_se) rep.monotone = false;
    }
    eps_v.push_back(pt.eps);
    err_v.push_back(std::max(pt.error, 1e-300));
    sc_v.push_back(std::max(pt.scaled_error, 1e-300));
    rep.points.push_back(pt);
  }
  rep.rate_fit_error = loglog_slope(eps_v, err_v).first;
  rep.rate_fit_scaled_error = loglog_slope(eps_v, sc_v).first;
  return rep;
}

std::pair<double, double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DomainError("loglog_slope: need >= 2 matching points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::log(y[i]) - my - slope * (std::log(x[i]) - mx);
    rss += r * r;
  }
  const double se = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
  return {slope, se};
}

}  // namespace roughvol
