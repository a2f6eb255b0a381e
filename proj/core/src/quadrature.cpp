#include "roughvol/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace roughvol::quad {

Rule gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jj = static_cast<double>(j);
        p1 = ((2.0 * jj + 1.0) * z * p2 - jj * p3) / (jj + 1.0);
      }
      pp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

Rule gauss_hermite_normal(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite_normal: n must be positive");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
  // polynomials for starting nodes, then Newton on the orthonormal recurrence
  // for full-precision nodes and weights.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd off(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
  for (Eigen::Index k = 0; k < off.size(); ++k) off[k] = std::sqrt(static_cast<double>(k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("gauss_hermite_normal: eigensolver failed");

  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = es.eigenvalues()[static_cast<Eigen::Index>(i)];
    double p_prev = 0.0;  // orthonormal p_{n-1}(z)
    for (int iter = 0; iter < 8; ++iter) {
      // orthonormal w.r.t. the standard normal: sqrt(k+1) p_{k+1} = z p_k - sqrt(k) p_{k-1}
      double p0 = 1.0, pm = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k);
        const double p1 = (z * p0 - std::sqrt(kk) * pm) / std::sqrt(kk + 1.0);
        pm = p0;
        p0 = p1;
      }
      p_prev = pm;
      const double dp = std::sqrt(static_cast<double>(n)) * pm;  // p_n' = sqrt(n) p_{n-1}
      const double step = p0 / dp;
      if (!std::isfinite(step)) break;  // extreme nodes of very high orders overflow
      z -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) break;
    }
    r.nodes[i] = z;
    // w_i = 1 / (n p_{n-1}(z_i)^2); the recurrence above drops the density factor
    const double w = 1.0 / (static_cast<double>(n) * p_prev * p_prev);
    r.weights[i] = std::isfinite(w) ? w : 0.0;
  }
  // symmetrize
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double z = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
    const double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    r.weights[i] = r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

Rule trapezoid_normal(double step, double half_width) {
  if (!(step > 0.0) || !(half_width > step)) throw std::invalid_argument("trapezoid_normal: need 0 < step < half_width");
  const auto k_max = static_cast<long>(std::floor(half_width / step));
  Rule r;
  double total = 0.0;
  for (long k = -k_max; k <= k_max; ++k) {
    const double z = static_cast<double>(k) * step;
    r.nodes.push_back(z);
    r.weights.push_back(std::exp(-0.5 * z * z));
    total += r.weights.back();
  }
  for (auto& w : r.weights) w /= total;
  return r;
}

namespace {

Rule trapezoid_level(std::size_t level) { return trapezoid_normal(0.4 / std::ldexp(1.0, static_cast<int>(level))); }

template <Rule (*Make)(std::size_t)>
const Rule& cached(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<Rule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Rule>(Make(n));
  return *slot;
}

}  // namespace

const Rule& cached_gauss_legendre(std::size_t n) { return cached<gauss_legendre>(n); }
const Rule& cached_gauss_hermite_normal(std::size_t n) {
  return cached<gauss_hermite_normal>(n);
}
const Rule& cached_trapezoid_normal(int level) {
  if (level < 0) throw std::invalid_argument("cached_trapezoid_normal: level must be >= 0");
  return cached<trapezoid_level>(static_cast<std::size_t>(level));
}

double wynn_epsilon(std::span<const double> s) {
  const std::size_t n = s.size();
  if (n == 0) return 0.0;
  if (n < 3) return s.back();
  // prev = column k-1, cur = column k; column k has n-k entries.
  std::vector<double> prev(n + 1, 0.0);
  std::vector<double> cur(s.begin(), s.end());
  double best = s.back();
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<double> next(n - k);
    for (std::size_t i = 0; i + k < n; ++i) {
      const double diff = cur[i + 1] - cur[i];
      if (diff == 0.0) return k % 2 == 1 ? cur[i + 1] : best;
      next[i] = prev[i + 1] + 1.0 / diff;
    }
    if (k % 2 == 0) best = next.back();
    prev = std::move(cur);
    cur = std::move(next);
  }
  return best;
}

}  // namespace roughvol::quad
