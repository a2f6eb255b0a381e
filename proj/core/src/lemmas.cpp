#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "roughvol/error.hpp"
#include "roughvol/experiments.hpp"
#include "roughvol/kernel.hpp"
#include "roughvol/parallel.hpp"
#include "roughvol/quadrature.hpp"
#include "roughvol/rng.hpp"

namespace roughvol {
namespace {

struct Nodes {
  std::vector<double> u, w;  // kernel time units
};

// Quadrature for int_0^U f(u) du with f ~ u^{H-1/2} at the origin: graded
// Gauss-Legendre on [0, min(U, 1)], doubling panels beyond.
Nodes s_nodes(double upper, double hurst, int per_panel) {
  Nodes out;
  const auto& gl = quad::cached_gauss_legendre(static_cast<std::size_t>(per_panel));
  const double p = 4.0 / (hurst + 0.5);
  const double first = std::min(upper, 1.0);
  for (int half = 0; half < 2; ++half) {
    const double a = 0.5 * half, b = a + 0.5;
    for (std::size_t q = 0; q < gl.size(); ++q) {
      const double w = a + 0.5 * (b - a) * (gl.nodes[q] + 1.0);
      out.u.push_back(first * std::pow(w, p));
      out.w.push_back(0.5 * (b - a) * gl.weights[q] * first * p * std::pow(w, p - 1.0));
    }
  }
  double lo = first, width = 1.0;
  while (lo < upper * (1.0 - 1e-14)) {
    const double hi = std::min(upper, lo + width);
    for (std::size_t q = 0; q < gl.size(); ++q) {
      out.u.push_back(lo + 0.5 * (hi - lo) * (gl.nodes[q] + 1.0));
      out.w.push_back(0.5 * (hi - lo) * gl.weights[q]);
    }
    lo = hi;
    width *= 2.0;
  }
  return out;
}

// Gaussian representation of the past at t = 0. The past (-P, 0) in kernel
// time is cut into cells growing geometrically away from 0; for row q,
// m_q = sum_j B_qj N_j is the conditional mean of Z at kernel time u_q given
// the cell increments, and v_q the remaining variance, so that m_q + sqrt(v_q) xi
// has the exact stationary marginal. Row 0 is u = 0.
class PastConditioner {
 public:
  PastConditioner(const KernelEval& ke, const std::vector<double>& u, double horizon, double ratio) {
    const double sig = ke.sigma_ou();
    std::vector<double> edges{0.0};
    double width = 1e-3;
    while (edges.back() < horizon) {
      edges.push_back(edges.back() + width);
      width *= ratio;
    }
    cells_ = static_cast<int>(edges.size()) - 1;
    rows_ = static_cast<int>(u.size()) + 1;
    b_.resize(rows_, cells_);
    var_.resize(rows_);
    for (int q = 0; q < rows_; ++q) {
      const double uq = q == 0 ? 0.0 : u[q - 1];
      double captured = 0.0;
      for (int j = 0; j < cells_; ++j) {
        const double wj = edges[j + 1] - edges[j];
        const double m = ke.mass(uq + edges[j], uq + edges[j + 1]);
        b_(q, j) = sig * m / std::sqrt(wj);
        captured += b_(q, j) * b_(q, j);
      }
      var_[q] = std::max(0.0, sig * sig - captured);
    }
  }

  int rows() const { return rows_; }
  int cells() const { return cells_; }
  const Eigen::MatrixXd& loadings() const { return b_; }
  double cond_var(int q) const { return var_[q]; }

  // m (rows) and Z_0 for one path.
  void draw(std::uint64_t seed, std::uint64_t path, Eigen::VectorXd& noise, Eigen::VectorXd& m,
            double& z0) const {
    NormalStream s(seed, path, 0);
    noise.resize(cells_);
    for (int j = 0; j < cells_; ++j) noise[j] = s.at(j);
    m.noalias() = b_ * noise;
    z0 = m[0] + std::sqrt(var_[0]) * NormalStream(seed, path, 2).at(0);
  }

 private:
  int rows_ = 0, cells_ = 0;
  Eigen::MatrixXd b_;
  std::vector<double> var_;
};

template <class G>
double gauss_expect(const G& g, double m, double sd, const quad::Rule& rule) {
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) acc += rule.weights[k] * g(m + sd * rule.nodes[k]);
  return acc;
}

// Cov(F(Z1)^2, F(Z2)^2) for Z ~ N(0, sigma_ou^2) with correlation c.
double psi_sq(double c, const VolFunction& f, double sig, const quad::Rule& rule, double mean_f2) {
  const double r = std::sqrt(std::max(0.0, 1.0 - c * c));
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double z1 = rule.nodes[i];
    const double a = f.value(sig * z1);
    double inner = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double b = f.value(sig * (c * z1 + r * rule.nodes[k]));
      inner += rule.weights[k] * b * b;
    }
    acc += rule.weights[i] * a * a * inner;
  }
  return acc - mean_f2 * mean_f2;
}

}  // namespace

VarthetaReport vartheta_check(const ModelParams& mp, long n_paths, std::uint64_t seed,
                              const LemmaOptions& opt) {
  mp.validate();
  if (n_paths <= 0) throw ConfigError("n_paths", "must be > 0");
  const Hurst h = mp.hurst;
  const KernelEval ke(h);
  const CovarianceEval ce(h);
  const auto gp = group_params(mp);
  const double sig = ke.sigma_ou(), U = mp.maturity / mp.eps;
  const auto nodes = s_nodes(U, h.value(), opt.s_nodes_per_panel);
  const PastConditioner past(ke, nodes.u, opt.past_horizon_over_T * U, opt.past_ratio);
  const auto& rule = quad::cached_gauss_hermite_normal(static_cast<std::size_t>(opt.gh_order));
  const auto& f = mp.vol_fn;
  std::vector<double> kw(nodes.u.size()), sd(nodes.u.size());
  for (std::size_t q = 0; q < nodes.u.size(); ++q) {
    kw[q] = sig * nodes.w[q] * ke(nodes.u[q]);
    sd[q] = std::sqrt(past.cond_var(static_cast<int>(q) + 1));
  }

  VarthetaReport rep;
  rep.eps = mp.eps;
  rep.n_paths = n_paths;
  rep.d_bar = gp.d_bar;
  rep.d_bar_horizon = d_bar_detailed(f, ke, ce, 40, U).value;
  const double k_t = sig * f.sup_abs() * f.sup_abs_f_fprime() * ke.l1_norm();
  rep.bound = k_t * std::sqrt(mp.eps);

  std::vector<double> stat(n_paths);
  parallel_blocks(static_cast<std::size_t>(n_paths), opt.block, [&](std::size_t b, std::size_t e, unsigned) {
    Eigen::VectorXd noise, m;
    for (std::size_t p = b; p < e; ++p) {
      double z0;
      past.draw(seed, p, noise, m, z0);
      double theta = 0.0;  // theta_0 / sqrt(eps)
      for (std::size_t q = 0; q < kw.size(); ++q)
        theta += kw[q] * gauss_expect([&](double z) { return f.f_fprime(z); }, m[q + 1], sd[q], rule);
      stat[p] = f.value(z0) * theta;
    }
  });
  double s = 0.0, s2 = 0.0, mx = 0.0;
  for (long p = 0; p < n_paths; ++p) {
    s += stat[p];
    s2 += stat[p] * stat[p];
    mx = std::max(mx, std::abs(stat[p]) * std::sqrt(mp.eps));
    if (std::abs(stat[p]) * std::sqrt(mp.eps) > rep.bound) ++rep.violations;
  }
  rep.mean_scaled = s / n_paths;
  rep.se_scaled = n_paths > 1 ? std::sqrt(std::max(0.0, s2 / n_paths - rep.mean_scaled * rep.mean_scaled) /
                                          (n_paths - 1))
                              : 0.0;
  rep.max_abs = mx;
  rep.rel_dev_d_bar = std::abs(rep.mean_scaled - rep.d_bar) / std::abs(rep.d_bar);
  rep.rel_dev_horizon = std::abs(rep.mean_scaled - rep.d_bar_horizon) / std::abs(rep.d_bar_horizon);
  return rep;
}

RateReport phi_variance_check(const ModelParams& mp, const std::vector<double>& eps_grid, long n_mc,
                              std::uint64_t seed, const LemmaOptions& opt) {
  mp.validate();
  if (n_mc <= 1) throw ConfigError("n_paths", "must be > 1");
  if (eps_grid.size() < 4) throw ConfigError("eps_grid", "needs at least 4 points");
  const Hurst h = mp.hurst;
  const KernelEval ke(h);
  const auto gp = group_params(mp);
  const auto& f = mp.vol_fn;
  const double sb2 = gp.sigma_bar * gp.sigma_bar;
  auto g_fn = [&](double z) { const double v = f.value(z); return 0.5 * (v * v - sb2); };
  const auto& rule = quad::cached_gauss_hermite_normal(static_cast<std::size_t>(opt.gh_order));

  RateReport rep;
  rep.statistic = "phi";
  rep.target = 2.0 - 2.0 * h.value();
  std::vector<double> eps_v, sec_v, pred_v;
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    const double eps = eps_grid[k];
    if (!(eps > 0.0)) throw ConfigError("eps_grid", "entries must be > 0");
    const double U = mp.maturity / eps;
    const auto nodes = s_nodes(U, h.value(), opt.s_nodes_per_panel);
    const PastConditioner past(ke, nodes.u, opt.past_horizon_over_T * U, opt.past_ratio);
    const std::size_t nq = nodes.u.size();
    std::vector<double> sd(nq);
    for (std::size_t q = 0; q < nq; ++q) sd[q] = std::sqrt(past.cond_var(static_cast<int>(q) + 1));

    std::vector<double> stat(n_mc);
    const std::uint64_t level_seed = seed + 7919 * (k + 1);
    parallel_blocks(static_cast<std::size_t>(n_mc), opt.block, [&](std::size_t b, std::size_t e, unsigned) {
      Eigen::VectorXd noise, m;
      for (std::size_t p = b; p < e; ++p) {
        double z0;
        past.draw(level_seed, p, noise, m, z0);
        double phi = 0.0;
        for (std::size_t q = 0; q < nq; ++q) phi += nodes.w[q] * gauss_expect(g_fn, m[q + 1], sd[q], rule);
        stat[p] = eps * phi;
      }
    });

    // Deterministic E[phi^2]: bivariate Gaussian over the conditional means,
    // with g_q tabulated on a grid of m.
    const Eigen::MatrixXd& b = past.loadings();
    const Eigen::MatrixXd cov = b.bottomRows(nq) * b.bottomRows(nq).transpose();
    constexpr int kGrid = 161;
    std::vector<double> table(nq * kGrid), lo(nq), step(nq);
    for (std::size_t q = 0; q < nq; ++q) {
      const double s = std::sqrt(std::max(cov(q, q), 1e-300));
      lo[q] = -9.0 * s;
      step[q] = 18.0 * s / (kGrid - 1);
      for (int i = 0; i < kGrid; ++i) table[q * kGrid + i] = gauss_expect(g_fn, lo[q] + i * step[q], sd[q], rule);
    }
    auto g_at = [&](std::size_t q, double m) {
      double pos = std::clamp((m - lo[q]) / step[q], 0.0, kGrid - 1.000001);
      const int i = static_cast<int>(pos);
      const double w = pos - i;
      return (1 - w) * table[q * kGrid + i] + w * table[q * kGrid + i + 1];
    };
    const auto& r2 = quad::cached_gauss_hermite_normal(20);
    double pred = 0.0;
    for (std::size_t q = 0; q < nq; ++q)
      for (std::size_t q2 = q; q2 < nq; ++q2) {
        const double s1 = std::sqrt(cov(q, q)), s2 = std::sqrt(cov(q2, q2));
        const double c = std::clamp(cov(q, q2) / (s1 * s2), -1.0, 1.0), rr = std::sqrt(1.0 - c * c);
        double acc = 0.0;
        for (std::size_t i = 0; i < r2.size(); ++i) {
          const double a = g_at(q, s1 * r2.nodes[i]);
          double inner = 0.0;
          for (std::size_t j = 0; j < r2.size(); ++j)
            inner += r2.weights[j] * g_at(q2, s2 * (c * r2.nodes[i] + rr * r2.nodes[j]));
          acc += r2.weights[i] * a * inner;
        }
        pred += (q == q2 ? 1.0 : 2.0) * nodes.w[q] * nodes.w[q2] * acc;
      }
    pred *= eps * eps;

    RatePoint pt;
    pt.eps = eps;
    double s = 0, s2 = 0, s4 = 0;
    for (double x : stat) {
      s += x;
      s2 += x * x;
      s4 += x * x * x * x;
    }
    const double n = static_cast<double>(n_mc);
    pt.mean = s / n;
    pt.mean_se = std::sqrt(std::max(0.0, s2 / n - pt.mean * pt.mean) / (n - 1));
    pt.second = s2 / n;
    pt.second_se = std::sqrt(std::max(0.0, s4 / n - pt.second * pt.second) / (n - 1));
    pt.prediction = pred;
    rep.points.push_back(pt);
    eps_v.push_back(eps);
    sec_v.push_back(pt.second);
    pred_v.push_back(pred);
  }
  std::tie(rep.slope, rep.slope_se) = loglog_slope(eps_v, sec_v);
  rep.slope_prediction = loglog_slope(eps_v, pred_v).first;
  return rep;
}

RateReport kappa_check(const ModelParams& mp, const std::vector<double>& eps_grid, long n_mc,
                       std::uint64_t seed, const MCOptions& opt) {
  mp.validate();
  if (n_mc <= 1) throw ConfigError("n_paths", "must be > 1");
  if (eps_grid.size() < 4) throw ConfigError("eps_grid", "needs at least 4 points");
  const auto gp = group_params(mp);
  const double sb2 = gp.sigma_bar * gp.sigma_bar;
  const Hurst h = mp.hurst;
  const CovarianceEval ce(h);
  const KernelEval ke(h);
  const auto& rule = quad::cached_gauss_hermite_normal(40);

  RateReport rep;
  rep.statistic = "kappa";
  rep.target = 2.0 - h.value();
  std::vector<double> eps_v, sec_v, pred_v;
  for (std::size_t k = 0; k < eps_grid.size(); ++k) {
    ModelParams m = mp;
    m.eps = eps_grid[k];
    SimGrid grid = SimGrid::for_model(m, opt.dt_over_eps, opt.warmup_over_eps);
    grid.exact_cells = opt.exact_cells;
    const PathSimulator sim(m, grid);
    const int n = grid.n_steps;
    const double dt = grid.dt, scale = 0.5 * std::sqrt(m.eps);
    const std::size_t block = 256;
    const std::size_t blocks = (static_cast<std::size_t>(n_mc) + block - 1) / block;
    std::vector<std::vector<double>> b1(blocks, std::vector<double>(n + 1, 0.0)), b2 = b1, b4 = b1;
    const unsigned workers = worker_count();
    std::vector<PathSimulator::WorkspacePtr> ws;
    std::vector<PathBundle> bundles(workers);
    for (unsigned w = 0; w < workers; ++w) ws.push_back(sim.make_workspace());
    const std::uint64_t level_seed = seed + 104729 * (k + 1);
    parallel_blocks(static_cast<std::size_t>(n_mc), block, [&](std::size_t b, std::size_t e, unsigned w) {
      auto& acc1 = b1[b / block];
      auto& acc2 = b2[b / block];
      auto& acc4 = b4[b / block];
      for (std::size_t p = b; p < e; ++p) {
        sim.simulate(level_seed, p, false, bundles[w], *ws[w]);
        const auto& sg = bundles[w].sigma;
        double kap = 0.0;
        for (int i = 0; i <= n; ++i) {
          if (i > 0) kap += scale * (sg[i - 1] * sg[i - 1] - sb2) * dt;
          acc1[i] += kap;
          acc2[i] += kap * kap;
          acc4[i] += kap * kap * kap * kap;
        }
      }
    });
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0), s4(n + 1, 0.0);
    for (std::size_t bl = 0; bl < blocks; ++bl)
      for (int i = 0; i <= n; ++i) {
        s1[i] += b1[bl][i];
        s2[i] += b2[bl][i];
        s4[i] += b4[bl][i];
      }
    int arg = 0;
    for (int i = 1; i <= n; ++i)
      if (s2[i] > s2[arg]) arg = i;
    const double nn = static_cast<double>(n_mc);
    RatePoint pt;
    pt.eps = m.eps;
    pt.t_at_sup = arg * dt;
    pt.second = s2[arg] / nn;
    pt.second_se = std::sqrt(std::max(0.0, s4[arg] / nn - pt.second * pt.second) / (nn - 1));
    pt.mean = s1[arg] / nn;
    pt.mean_se = std::sqrt(std::max(0.0, pt.second - pt.mean * pt.mean) / (nn - 1));

    // E[kappa_T^2] = (eps^2 / 2) int_0^{T/eps} (T - eps v) Psi2(C_Z(v)) dv.
    const double U = m.maturity / m.eps;
    auto integrand = [&](double v) {
      return (m.maturity - m.eps * v) * psi_sq(ce(v), m.vol_fn, ke.sigma_ou(), rule, sb2);
    };
    double integral = quad::integrate_graded_left(integrand, 0.0, std::min(U, 1.0), 2 * h.value() - 1.0,
                                                  1e-10, 1e-8).value;
    double lo = 1.0, width = 1.0;
    while (lo < U) {
      const double hi = std::min(U, lo + width);
      integral += quad::integrate(integrand, lo, hi, 1e-12, 1e-8).value;
      lo = hi;
      width *= 2.0;
    }
    pt.prediction = 0.5 * m.eps * m.eps * integral;
    rep.points.push_back(pt);
    eps_v.push_back(m.eps);
    sec_v.push_back(pt.second);
    pred_v.push_back(pt.prediction);
  }
  std::tie(rep.slope, rep.slope_se) = loglog_slope(eps_v, sec_v);
  rep.slope_prediction = loglog_slope(eps_v, pred_v).first;
  return rep;
}

}  // namespace roughvol
