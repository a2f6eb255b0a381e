#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "roughvol/kernel.hpp"
#include "roughvol/model.hpp"

namespace roughvol {

enum class Scheme { TruncatedMovingAverage, CholeskyExact };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Time grid of a simulation. Cells are [j dt, (j+1) dt] for integer j;
/// cells with j < 0 form the simulated past (warmup).
struct SimGrid {
  int n_steps = 0;
  double dt = 0.0;
  double warmup_horizon = 0.0;
  Scheme scheme = Scheme::TruncatedMovingAverage;
  /// Cells nearest the kernel singularity whose stochastic integrals are
  /// sampled exactly, jointly with the Brownian increment of the cell.
  int exact_cells = 16;

  /// n_steps = round(T / dt_target) with dt = T / n_steps.
  static SimGrid for_model(const ModelParams& mp, double dt_over_eps = 0.125,
                           double warmup_over_eps = 30.0,
                           Scheme scheme = Scheme::TruncatedMovingAverage);

  /// Throws ConfigError on violation: dt <= eps/4 (moving-average scheme),
  /// warmup >= 20 eps, n_steps * dt = T, n_steps <= 512 for CholeskyExact.
  void validate(const ModelParams& mp) const;
};

struct PathBundle {
  std::vector<double> times;   // n+1 grid times
  std::vector<double> dW, dB;  // n increments
  std::vector<double> Z;       // n+1
  std::vector<double> sigma;   // n+1, sigma_i = F(Z_i)
  std::vector<double> X;       // n+1
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};

enum class Variant { Stationary, RiemannLiouville };

/// Path generator. Immutable after construction; simulate() is safe to call
/// concurrently with distinct workspaces.
///
/// Moving-average scheme: Z_i = sigma_ou sum_j (cell j contribution) + tail,
/// where the kernel lag k = i - j uses, for k <= exact_cells, the exact cell
/// integral int_cell K^eps(t_i - u) dW_u sampled jointly with dW_j, and for
/// larger k the cell average of K^eps times dW_j. Cells before the warmup
/// enter through one Gaussian per path whose loading matches the exact
/// remaining variance; an independent per-step term restores the small
/// variance lost by cell averaging, so Var(Z_i) is exact.
class PathSimulator {
 public:
  struct Workspace;
  struct WorkspaceDeleter {
    void operator()(Workspace* w) const;
  };
  using WorkspacePtr = std::unique_ptr<Workspace, WorkspaceDeleter>;

  PathSimulator(const ModelParams& mp, const SimGrid& grid,
                Variant variant = Variant::Stationary, double z0 = 0.0);
  ~PathSimulator();
  PathSimulator(PathSimulator&&) noexcept;

  const ModelParams& model() const { return mp_; }
  const SimGrid& grid() const { return grid_; }
  Variant variant() const { return variant_; }
  const KernelEval& kernel() const { return *ke_; }
  /// Number of warmup cells (0 for the Riemann-Liouville variant).
  int warmup_cells() const { return L_; }

  WorkspacePtr make_workspace() const;

  /// Path `path_index` of the stream keyed by `seed`. With `antithetic`,
  /// paths 2m and 2m+1 share noise with opposite signs.
  void simulate(std::uint64_t seed, std::uint64_t path_index, bool antithetic, PathBundle& out,
                Workspace& ws) const;

  /// Same law as simulate() but driven by caller-supplied increments:
  /// `dw_cells` holds dW for cells -L..n-1 (L = warmup_cells()), `db` the n
  /// increments of B. The remaining noise (exact-cell components, residual
  /// and tail terms) is drawn from (noise_seed, pair) with the given sign.
  /// Lets several grids share one Brownian path.
  void simulate_driven(std::span<const double> dw_cells, std::span<const double> db,
                       std::uint64_t noise_seed, std::uint64_t pair, double sign, PathBundle& out,
                       Workspace& ws) const;

  /// Brownian increment of cell j (j may be negative) for a path; the same
  /// draw simulate() uses.
  double brownian_increment(std::uint64_t seed, std::uint64_t path_index, bool antithetic,
                            std::int64_t cell) const;

  /// Analytic covariance of the scheme's (Z_0..Z_n), in units of sigma_ou^2.
  std::vector<std::vector<double>> scheme_covariance() const;

  /// Moving-average weights: weight(k) multiplies dW of the cell at lag k.
  double lag_weight(int k) const;

 private:
  void prepare(std::uint64_t seed, std::uint64_t path_index, PathBundle& out) const;
  void finish(PathBundle& out) const;
  void fill_moving_average(std::uint64_t seed, std::uint64_t pair, double sign, PathBundle& out,
                           Workspace& ws) const;
  void fill_exact(std::uint64_t seed, std::uint64_t pair, double sign, PathBundle& out) const;

  ModelParams mp_;
  SimGrid grid_;
  Variant variant_;
  double z0_;
  std::unique_ptr<KernelEval> ke_;
  int L_ = 0;
  int kappa_ = 0;
  double sig_ = 0.0;
  std::vector<double> w_;          // w_[k] = cell-average weight at lag k (0 for k <= kappa)
  std::vector<double> cell_chol_;  // (kappa+1)^2 lower Cholesky of (dW, Y_1..Y_kappa)
  std::vector<double> tail_sd_;    // per grid index, pre-warmup loading
  std::vector<double> resid_sd_;   // per grid index, compensating white noise
  std::vector<double> exact_chol_; // CholeskyExact factor, row-major
  int exact_dim_ = 0;
  std::size_t fft_size_ = 0;
  std::vector<double> kernel_spectrum_;  // interleaved complex
  bool use_fft_ = false;
};

/// Convenience wrappers. `fn` receives each path in index order.
void simulate_paths(const ModelParams& mp, const SimGrid& grid, int n_paths, std::uint64_t seed,
                    const std::function<void(const PathBundle&)>& fn, bool antithetic = false);
void simulate_paths_RL(const ModelParams& mp, const SimGrid& grid, double z0, int n_paths,
                       std::uint64_t seed, const std::function<void(const PathBundle&)>& fn,
                       bool antithetic = false);

struct ExactGaussianReport {
  int n = 0;
  double max_abs_discrepancy = 0.0;   // scheme vs exact, correlation units
  double argmax_lag = 0.0;            // lag (in eps) of the worst entry
  double max_cross_discrepancy = 0.0; // E[Z dW] scheme vs exact
  double exact_zero_offset = 0.0;     // (L L^T)_00 of the exact factor
  double reconstruction_error = 0.0;  // max |L L^T - Sigma|
  double jitter = 0.0;
};

/// Builds the exact covariance of (Z on the grid, dW) from sigma_ou^2 C_Z and
/// E[Z_t dW_j] = sigma_ou int_cell K^eps, factors it, and compares the
/// moving-average scheme's analytic covariance against it.
ExactGaussianReport exact_gaussian_check(const ModelParams& mp, const SimGrid& grid);

/// One CSV per path: header comment lines, then "time,Z,sigma,X".
void write_path_csv(std::ostream& os, const PathBundle& p, const std::string& header_comment);

}  // namespace roughvol
