#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace roughvol::quad {

/// Nodes and weights of a fixed quadrature rule.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule on [-1, 1].
Rule gauss_legendre(std::size_t n);

/// Gauss-Hermite rule for expectations against the standard normal:
/// E[f(Z)] ~ sum_i w_i f(x_i), with sum_i w_i = 1.
Rule gauss_hermite_normal(std::size_t n);

/// Trapezoid rule against the standard normal on [-half_width, half_width]
/// with nodes k * step, weights step * phi(k * step) renormalized to sum to 1.
/// Converges geometrically in 1/step for integrands analytic in a strip.
Rule trapezoid_normal(double step, double half_width = 12.0);

/// Cached rules; returned references stay valid for the program lifetime.
const Rule& cached_gauss_legendre(std::size_t n);
const Rule& cached_gauss_hermite_normal(std::size_t n);
/// step = 0.4 / 2^level.
const Rule& cached_trapezoid_normal(int level);

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

namespace detail {

// Kronrod 15-point nodes (non-negative half) and weights, Gauss 7-point weights.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double s = f(c - x) + f(c + x);
    resk += kWgk[j] * s;
    if (j % 2 == 1) resg += kWg[j / 2] * s;
  }
  return {a, b, resk * h, std::abs((resk - resg) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
/// Bisects the segment with the largest error estimate until the summed
/// estimate drops below max(abs_tol, rel_tol*|I|).
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol, double rel_tol = 1e-12,
                 std::size_t max_segments = 4000) {
  Result out;
  if (a == b) return out;
  std::priority_queue<detail::Segment> heap;
  auto first = detail::gk15(f, a, b);
  heap.push(first);
  out.evaluations = 15;
  double total = first.value;
  double err = first.error;
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (heap.size() >= max_segments) {
      out.converged = false;
      break;
    }
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted in floating point
      heap.push(worst);
      out.converged = false;
      break;
    }
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // re-sum to shed accumulated cancellation from the running updates
  double sum = 0.0, esum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.abs_error = esum;
  return out;
}

/// Integral over [a, b] of an integrand with an algebraic endpoint singularity
/// at `a` of type (x-a)^beta (beta > -1), or a non-smooth power term there.
/// Uses x = a + (b-a) w^p with p chosen so the transformed integrand behaves
/// like w^{p(1+beta)-1} with p(1+beta) >= 4.
template <class F>
Result integrate_graded_left(F&& f, double a, double b, double beta, double abs_tol,
                             double rel_tol = 1e-12) {
  const double p = std::max(1.0, 4.0 / (1.0 + beta));
  const double len = b - a;
  auto g = [&](double w) {
    if (w <= 0.0) return 0.0;
    const double wp1 = std::pow(w, p - 1.0);
    return f(a + len * wp1 * w) * len * p * wp1;
  };
  return integrate(g, 0.0, 1.0, abs_tol, rel_tol);
}

/// Mirror of integrate_graded_left for a singular/non-smooth right endpoint.
template <class F>
Result integrate_graded_right(F&& f, double a, double b, double beta, double abs_tol,
                              double rel_tol = 1e-12) {
  auto g = [&](double u) { return f(a + b - u); };
  return integrate_graded_left(g, a, b, beta, abs_tol, rel_tol);
}

/// Integral over [a, inf) of an integrand that decays at least like an
/// integrable power. Geometric panels of ratio 2 starting at width `first_width`;
/// stops once a panel contributes below the tolerance for several consecutive
/// panels, or at `x_max`.
template <class F>
Result integrate_to_infinity(F&& f, double a, double first_width, double abs_tol,
                             double rel_tol = 1e-12, double x_max = 1e12) {
  Result out;
  double lo = a, width = first_width;
  int quiet = 0;
  while (lo < x_max) {
    const double hi = std::min(lo + width, x_max);
    auto part = integrate(f, lo, hi, 0.1 * abs_tol, rel_tol);
    out.value += part.value;
    out.abs_error += part.abs_error;
    out.evaluations += part.evaluations;
    out.converged = out.converged && part.converged;
    if (std::abs(part.value) < 0.01 * abs_tol) {
      if (++quiet >= 4) break;
    } else {
      quiet = 0;
    }
    lo = hi;
    width *= 2.0;
  }
  return out;
}

/// Wynn epsilon extrapolation of a sequence of partial sums. Returns the
/// last even-column entry of the epsilon table.
double wynn_epsilon(std::span<const double> partial_sums);

}  // namespace roughvol::quad
