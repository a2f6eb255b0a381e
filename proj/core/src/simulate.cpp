#include "roughvol/simulate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>

#include "roughvol/error.hpp"
#include "roughvol/rng.hpp"

namespace roughvol {
namespace {

constexpr std::uint32_t kStreamW = 0, kStreamB = 1, kStreamResid = 2, kStreamTail = 3,
                        kStreamExact = 4, kStreamAux = 16;
// Direct convolution below this many multiply-adds per path, FFT above.
constexpr double kDirectLimit = 2.0e5;

std::vector<double> lower_cholesky(const Eigen::MatrixXd& a, double jitter, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd b = a;
    b.diagonal().array() += jitter;
    llt.compute(b);
    if (llt.info() != Eigen::Success)
      throw NumericalError(std::string(what) + ": covariance not positive definite after jitter");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  std::vector<double> out(static_cast<std::size_t>(l.size()));
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    for (Eigen::Index j = 0; j < l.cols(); ++j) out[i * l.cols() + j] = l(i, j);
  return out;
}

}  // namespace

std::string to_string(Scheme s) {
  return s == Scheme::CholeskyExact ? "cholesky_exact" : "truncated_moving_average";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "truncated_moving_average") return Scheme::TruncatedMovingAverage;
  if (s == "cholesky_exact") return Scheme::CholeskyExact;
  throw ConfigError("scheme", "expected truncated_moving_average or cholesky_exact, got '" + s + "'");
}

SimGrid SimGrid::for_model(const ModelParams& mp, double dt_over_eps, double warmup_over_eps,
                           Scheme scheme) {
  SimGrid g;
  g.n_steps = std::max(1, static_cast<int>(std::ceil(mp.maturity / (dt_over_eps * mp.eps) - 1e-9)));
  g.dt = mp.maturity / g.n_steps;
  g.warmup_horizon = warmup_over_eps * mp.eps;
  g.scheme = scheme;
  return g;
}

void SimGrid::validate(const ModelParams& mp) const {
  if (n_steps <= 0) throw ConfigError("n_steps", "must be > 0");
  if (!(dt > 0.0)) throw ConfigError("dt", "must be > 0");
  if (std::abs(n_steps * dt - mp.maturity) > 1e-9 * mp.maturity)
    throw ConfigError("dt", "n_steps * dt must equal the maturity");
  if (scheme == Scheme::TruncatedMovingAverage && dt > 0.25 * mp.eps * (1.0 + 1e-12))
    throw ConfigError("dt", "must satisfy dt <= eps/4 to resolve the fast scale");
  if (!(warmup_horizon >= 20.0 * mp.eps * (1.0 - 1e-12)))
    throw ConfigError("warmup_horizon", "must be >= 20 eps");
  if (exact_cells < 0 || exact_cells > 16) throw ConfigError("exact_cells", "must be in [0, 16]");
  if (scheme == Scheme::CholeskyExact && n_steps > 512)
    throw ConfigError("n_steps", "cholesky_exact scheme supports at most 512 steps");
}

struct PathSimulator::Workspace {
  Eigen::FFT<double> fft;
  std::vector<double> c, conv, hyb, dw;
  std::vector<std::complex<double>> spec;
  Workspace() { fft.SetFlag(Eigen::FFT<double>::HalfSpectrum); }
};

PathSimulator::~PathSimulator() = default;
PathSimulator::PathSimulator(PathSimulator&&) noexcept = default;

PathSimulator::PathSimulator(const ModelParams& mp, const SimGrid& grid, Variant variant, double z0)
    : mp_(mp), grid_(grid), variant_(variant), z0_(z0) {
  mp_.validate();
  grid_.validate(mp_);
  if (!std::isfinite(z0)) throw ConfigError("z0", "must be finite");
  if (variant == Variant::RiemannLiouville && grid.scheme == Scheme::CholeskyExact)
    throw ConfigError("scheme", "cholesky_exact is only available for the stationary model");

  ke_ = std::make_unique<KernelEval>(mp_.hurst);
  sig_ = ke_->sigma_ou();
  const int n = grid_.n_steps;
  const double eps = mp_.eps, dt = grid_.dt, h = dt / eps;

  if (grid_.scheme == Scheme::CholeskyExact) {
    const CovarianceEval ce(mp_.hurst);
    exact_dim_ = 2 * n + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(exact_dim_, exact_dim_);
    std::vector<double> cz(n + 1), mass(n + 1, 0.0);
    for (int k = 0; k <= n; ++k) cz[k] = ce(k * h);
    for (int k = 1; k <= n; ++k) mass[k] = std::sqrt(eps) * ke_->mass((k - 1) * h, k * h);
    for (int i = 0; i <= n; ++i) {
      for (int k = 0; k <= n; ++k) a(i, k) = sig_ * sig_ * cz[std::abs(i - k)];
      for (int j = 0; j < i; ++j) a(i, n + 1 + j) = a(n + 1 + j, i) = sig_ * mass[i - j];
    }
    for (int j = 0; j < n; ++j) a(n + 1 + j, n + 1 + j) = dt;
    exact_chol_ = lower_cholesky(a, 1e-10, "cholesky_exact");
    return;
  }

  L_ = variant == Variant::Stationary
           ? static_cast<int>(std::ceil(grid_.warmup_horizon / dt - 1e-9))
           : 0;
  const int cells = L_ + n;
  kappa_ = std::min(grid_.exact_cells, cells);

  std::vector<double> mass(cells + 1, 0.0);  // kernel units
  for (int k = 1; k <= cells; ++k) mass[k] = ke_->mass((k - 1) * h, k * h);
  w_.assign(cells + 1, 0.0);
  for (int k = kappa_ + 1; k <= cells; ++k) w_[k] = std::sqrt(eps) * mass[k] / dt;

  // Joint law of (dW, Y_1..Y_kappa) on one cell, Y_k = int_cell K^eps(lag) dW.
  const int m = kappa_ + 1;
  Eigen::MatrixXd cc = Eigen::MatrixXd::Zero(m, m);
  cc(0, 0) = dt;
  std::vector<double> exact_var(kappa_ + 1, 0.0);
  for (int k = 1; k <= kappa_; ++k) {
    cc(0, k) = cc(k, 0) = std::sqrt(eps) * mass[k];
    for (int l = k; l <= kappa_; ++l)
      cc(k, l) = cc(l, k) = ke_->lagged_product((k - 1) * h, k * h, (l - k) * h);
    exact_var[k] = cc(k, k);
  }
  cell_chol_ = lower_cholesky(cc, 1e-14, "exact cell law");

  // Variance bookkeeping for Z_i: cells cover lags up to x_i = (i + L) h.
  tail_sd_.assign(n + 1, 0.0);
  resid_sd_.assign(n + 1, 0.0);
  double head = ke_->l2_head(L_ * h);
  double tail = variant == Variant::Stationary ? ke_->l2_tail(L_ * h) : 0.0;
  double covered = 0.0;
  for (int k = 1; k <= L_; ++k) covered += k <= kappa_ ? exact_var[k] : mass[k] * mass[k] / h;
  for (int i = 0; i <= n; ++i) {
    if (i > 0) {
      const int k = i + L_;
      const double piece = ke_->lagged_product((k - 1) * h, k * h, 0.0);
      head += piece;
      if (variant == Variant::Stationary) tail = std::max(0.0, tail - piece);
      covered += k <= kappa_ ? exact_var[k] : mass[k] * mass[k] / h;
    }
    tail_sd_[i] = sig_ * std::sqrt(tail);
    resid_sd_[i] = sig_ * std::sqrt(std::max(0.0, head - covered));
  }

  use_fft_ = static_cast<double>(n + 1) * cells > kDirectLimit;
  if (use_fft_) {
    std::size_t size = 1;
    while (size < 2 * static_cast<std::size_t>(cells + 1)) size <<= 1;
    fft_size_ = size;
    std::vector<double> kr(size, 0.0);
    for (int k = kappa_ + 1; k <= cells; ++k) kr[k] = w_[k];
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, kr);
    kernel_spectrum_.resize(2 * spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
      kernel_spectrum_[2 * i] = spec[i].real();
      kernel_spectrum_[2 * i + 1] = spec[i].imag();
    }
  }
}

void PathSimulator::WorkspaceDeleter::operator()(Workspace* w) const { delete w; }

PathSimulator::WorkspacePtr PathSimulator::make_workspace() const {
  return WorkspacePtr(new Workspace);
}

double PathSimulator::lag_weight(int k) const {
  if (k < 1 || k >= static_cast<int>(w_.size())) return 0.0;
  return w_[k];
}

double PathSimulator::brownian_increment(std::uint64_t seed, std::uint64_t path_index,
                                         bool antithetic, std::int64_t cell) const {
  const std::uint64_t pair = antithetic ? path_index / 2 : path_index;
  const double sign = antithetic && (path_index & 1u) ? -1.0 : 1.0;
  if (grid_.scheme == Scheme::CholeskyExact)
    throw DomainError("brownian_increment: not addressable under cholesky_exact");
  NormalStream sw(seed, pair, kStreamW);
  return sign * std::sqrt(grid_.dt) * sw.at(cell);
}

void PathSimulator::prepare(std::uint64_t seed, std::uint64_t path_index, PathBundle& out) const {
  const int n = grid_.n_steps;
  out.seed = seed;
  out.path_index = path_index;
  out.times.resize(n + 1);
  for (int i = 0; i <= n; ++i) out.times[i] = i * grid_.dt;
  out.Z.resize(n + 1);
  out.dW.resize(n);
  out.dB.resize(n);
  out.sigma.resize(n + 1);
  out.X.resize(n + 1);
}

void PathSimulator::simulate(std::uint64_t seed, std::uint64_t path_index, bool antithetic,
                             PathBundle& out, Workspace& ws) const {
  const int n = grid_.n_steps;
  const std::uint64_t pair = antithetic ? path_index / 2 : path_index;
  const double sign = antithetic && (path_index & 1u) ? -1.0 : 1.0;
  prepare(seed, path_index, out);
  const double sdt = std::sqrt(grid_.dt);
  if (grid_.scheme == Scheme::CholeskyExact) {
    fill_exact(seed, pair, sign, out);
  } else {
    NormalStream sw(seed, pair, kStreamW);
    ws.dw.resize(L_ + n);
    for (int c = 0; c < L_ + n; ++c) ws.dw[c] = sign * sdt * sw.at(c - L_);
    fill_moving_average(seed, pair, sign, out, ws);
  }
  NormalStream sb(seed, pair, kStreamB);
  for (int i = 0; i < n; ++i) out.dB[i] = sign * sdt * sb.at(i);
  finish(out);
}

void PathSimulator::simulate_driven(std::span<const double> dw_cells, std::span<const double> db,
                                    std::uint64_t noise_seed, std::uint64_t pair, double sign,
                                    PathBundle& out, Workspace& ws) const {
  const int n = grid_.n_steps;
  if (grid_.scheme != Scheme::TruncatedMovingAverage)
    throw DomainError("simulate_driven: only the moving-average scheme accepts external increments");
  if (dw_cells.size() != static_cast<std::size_t>(L_ + n) || db.size() != static_cast<std::size_t>(n))
    throw DomainError("simulate_driven: increment arrays have the wrong length");
  prepare(noise_seed, pair, out);
  ws.dw.assign(dw_cells.begin(), dw_cells.end());
  fill_moving_average(noise_seed, pair, sign, out, ws);
  std::copy(db.begin(), db.end(), out.dB.begin());
  finish(out);
}

void PathSimulator::finish(PathBundle& out) const {
  const int n = grid_.n_steps;
  for (int i = 0; i <= n; ++i) out.sigma[i] = mp_.vol_fn.value(out.Z[i]);
  const double rho = mp_.rho, rhobar = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  double logx = std::log(mp_.x0);
  out.X[0] = mp_.x0;
  for (int i = 0; i < n; ++i) {
    const double s = out.sigma[i];
    logx += -0.5 * s * s * grid_.dt + s * (rho * out.dW[i] + rhobar * out.dB[i]);
    out.X[i + 1] = std::exp(logx);
  }
}

void PathSimulator::fill_moving_average(std::uint64_t seed, std::uint64_t pair, double sign,
                                        PathBundle& out, Workspace& ws) const {
  const int n = grid_.n_steps, L = L_, kap = kappa_, m = kap + 1;
  const double sdt = std::sqrt(grid_.dt);
  // ws.dw[c] = dW of cell c - L
  for (int i = 0; i < n; ++i) out.dW[i] = ws.dw[i + L];

  // Exact near-singularity contributions: cell j reaches Z_{j+k}, k = 1..kappa.
  ws.hyb.assign(n + 1, 0.0);
  if (kap > 0) {
    std::vector<NormalStream> aux;
    aux.reserve(kap);
    for (int l = 1; l <= kap; ++l) aux.emplace_back(seed, pair, kStreamAux + l);
    double normals[17];
    for (int j = std::max(-L, -kap); j < n; ++j) {
      normals[0] = ws.dw[j + L] / sdt;
      for (int l = 1; l <= kap; ++l) normals[l] = sign * aux[l - 1].at(j);
      for (int k = 1; k <= kap && j + k <= n; ++k) {
        if (j + k < 0) continue;
        double y = 0.0;
        for (int l = 0; l <= k; ++l) y += cell_chol_[k * m + l] * normals[l];
        ws.hyb[j + k] += y;
      }
    }
  }

  // Cell-average part: conv[i] = sum_{k > kappa} w_k dW_{i-k}
  ws.conv.assign(n + 1, 0.0);
  if (use_fft_) {
    const std::size_t size = fft_size_;
    ws.c.assign(size, 0.0);
    std::copy(ws.dw.begin(), ws.dw.end(), ws.c.begin());
    ws.fft.fwd(ws.spec, ws.c);
    for (std::size_t q = 0; q < ws.spec.size(); ++q)
      ws.spec[q] *= std::complex<double>(kernel_spectrum_[2 * q], kernel_spectrum_[2 * q + 1]);
    ws.fft.inv(ws.c, ws.spec, size);
    for (int i = 0; i <= n; ++i) ws.conv[i] = ws.c[i + L];
  } else {
    for (int i = 0; i <= n; ++i) {
      double acc = 0.0;
      for (int k = kap + 1; k <= i + L; ++k) acc += w_[k] * ws.dw[i + L - k];
      ws.conv[i] = acc;
    }
  }

  NormalStream sr(seed, pair, kStreamResid);
  const double xi = variant_ == Variant::Stationary ? sign * NormalStream(seed, pair, kStreamTail).at(0)
                                                     : 0.0;
  for (int i = 0; i <= n; ++i) {
    double z = sig_ * (ws.conv[i] + ws.hyb[i]) + tail_sd_[i] * xi;
    if (resid_sd_[i] > 0.0) z += resid_sd_[i] * sign * sr.at(i);
    if (variant_ == Variant::RiemannLiouville) z += z0_ * std::exp(-out.times[i] / mp_.eps);
    out.Z[i] = z;
  }
}

void PathSimulator::fill_exact(std::uint64_t seed, std::uint64_t pair, double sign,
                               PathBundle& out) const {
  const int n = grid_.n_steps, d = exact_dim_;
  NormalStream se(seed, pair, kStreamExact);
  std::vector<double> g(d);
  for (int i = 0; i < d; ++i) g[i] = sign * se.at(i);
  for (int r = 0; r < d; ++r) {
    double acc = 0.0;
    const double* row = &exact_chol_[static_cast<std::size_t>(r) * d];
    for (int c = 0; c <= r; ++c) acc += row[c] * g[c];
    if (r <= n)
      out.Z[r] = acc;
    else
      out.dW[r - n - 1] = acc;
  }
}

std::vector<std::vector<double>> PathSimulator::scheme_covariance() const {
  if (grid_.scheme != Scheme::TruncatedMovingAverage)
    throw DomainError("scheme_covariance: only defined for the moving-average scheme");
  const int n = grid_.n_steps, kap = kappa_, m = kap + 1;
  const double dt = grid_.dt, s2 = sig_ * sig_;
  // Cell-level covariances of (dW, Y_1..Y_kappa) from the factor.
  std::vector<double> cc(m * m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int l = 0; l <= std::min(a, b); ++l) cc[a * m + b] += cell_chol_[a * m + l] * cell_chol_[b * m + l];
  auto cell_cov = [&](int k, int k2) {  // lags of the same cell in Z_i and Z_i'
    if (k <= kap && k2 <= kap) return cc[k * m + k2];
    if (k <= kap) return cc[k * m] * w_[k2];
    if (k2 <= kap) return cc[k2 * m] * w_[k];
    return w_[k] * w_[k2] * dt;
  };
  std::vector<std::vector<double>> out(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i <= n; ++i) {
    for (int i2 = i; i2 <= n; ++i2) {
      double acc = 0.0;
      for (int k = 1; k <= i + L_; ++k) acc += cell_cov(k, k + (i2 - i));
      acc += tail_sd_[i] * tail_sd_[i2] / s2;
      if (i == i2) acc += resid_sd_[i] * resid_sd_[i] / s2;
      out[i][i2] = out[i2][i] = acc;
    }
  }
  return out;
}

void simulate_paths(const ModelParams& mp, const SimGrid& grid, int n_paths, std::uint64_t seed,
                    const std::function<void(const PathBundle&)>& fn, bool antithetic) {
  if (n_paths <= 0) throw ConfigError("n_paths", "must be > 0");
  const PathSimulator sim(mp, grid);
  auto ws = sim.make_workspace();
  PathBundle p;
  for (int i = 0; i < n_paths; ++i) {
    sim.simulate(seed, static_cast<std::uint64_t>(i), antithetic, p, *ws);
    fn(p);
  }
}

void simulate_paths_RL(const ModelParams& mp, const SimGrid& grid, double z0, int n_paths,
                       std::uint64_t seed, const std::function<void(const PathBundle&)>& fn,
                       bool antithetic) {
  if (n_paths <= 0) throw ConfigError("n_paths", "must be > 0");
  const PathSimulator sim(mp, grid, Variant::RiemannLiouville, z0);
  auto ws = sim.make_workspace();
  PathBundle p;
  for (int i = 0; i < n_paths; ++i) {
    sim.simulate(seed, static_cast<std::uint64_t>(i), antithetic, p, *ws);
    fn(p);
  }
}

ExactGaussianReport exact_gaussian_check(const ModelParams& mp, const SimGrid& grid) {
  if (grid.n_steps > 512) throw ConfigError("n_steps", "exact_gaussian_check needs n_steps <= 512");
  SimGrid ma = grid;
  ma.scheme = Scheme::TruncatedMovingAverage;
  const PathSimulator scheme(mp, ma);
  SimGrid ex = grid;
  ex.scheme = Scheme::CholeskyExact;
  ex.validate(mp);

  const int n = grid.n_steps, d = 2 * n + 1;
  const double eps = mp.eps, dt = grid.dt, h = dt / eps;
  const KernelEval& ke = scheme.kernel();
  const double sig = ke.sigma_ou();
  const CovarianceEval ce(mp.hurst);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> cz(n + 1), mass(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) cz[k] = ce(k * h);
  for (int k = 1; k <= n; ++k) mass[k] = std::sqrt(eps) * ke.mass((k - 1) * h, k * h);
  for (int i = 0; i <= n; ++i) {
    for (int k = 0; k <= n; ++k) a(i, k) = sig * sig * cz[std::abs(i - k)];
    for (int j = 0; j < i; ++j) a(i, n + 1 + j) = a(n + 1 + j, i) = sig * mass[i - j];
  }
  for (int j = 0; j < n; ++j) a(n + 1 + j, n + 1 + j) = dt;

  ExactGaussianReport rep;
  rep.n = n;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    rep.jitter = 1e-10;
    Eigen::MatrixXd b = a;
    b.diagonal().array() += rep.jitter;
    llt.compute(b);
    if (llt.info() != Eigen::Success)
      throw NumericalError("exact_gaussian_check: covariance not PSD after jitter 1e-10");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd rec = l * l.transpose();
  rep.reconstruction_error = (rec - a).cwiseAbs().maxCoeff();
  rep.exact_zero_offset = rec(0, 0);

  const auto sc = scheme.scheme_covariance();
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k <= n; ++k) {
      const double diff = std::abs(sc[i][k] - cz[std::abs(i - k)]);
      if (diff > rep.max_abs_discrepancy) {
        rep.max_abs_discrepancy = diff;
        rep.argmax_lag = std::abs(i - k) * h;
      }
    }
  // Scheme cross-covariance E[Z_i dW_j] / sigma_ou equals the lag-k cell mass
  // by construction for both the exact and the averaged cells.
  for (int k = 1; k <= n; ++k) {
    const double schemed = k <= grid.exact_cells ? mass[k] : scheme.lag_weight(k) * dt;
    rep.max_cross_discrepancy = std::max(rep.max_cross_discrepancy, std::abs(schemed - mass[k]));
  }
  return rep;
}

void write_path_csv(std::ostream& os, const PathBundle& p, const std::string& header_comment) {
  std::size_t start = 0;
  while (start <= header_comment.size() && !header_comment.empty()) {
    const auto end = header_comment.find('\n', start);
    os << "# " << header_comment.substr(start, end == std::string::npos ? end : end - start) << '\n';
    if (end == std::string::npos) break;
    start = end + 1;
  }
  os << "time,Z,sigma,X\n";
  char buf[128];
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", p.times[i], p.Z[i], p.sigma[i], p.X[i]);
    os << buf;
  }
}

}  // namespace roughvol
