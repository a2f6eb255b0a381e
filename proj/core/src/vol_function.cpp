#include "roughvol/vol_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roughvol/error.hpp"

namespace roughvol {
namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

VolFunction::VolFunction(Family family, bool allow_unbounded) : family_(std::move(family)) {
  std::visit(
      Overloaded{
          [&](const BoundedSigmoid& p) {
            if (!(p.sigma_min > 0.0)) throw ConfigError("sigma_min", "must be > 0");
            if (!(p.sigma_max > p.sigma_min))
              throw ConfigError("sigma_max", "must exceed sigma_min");
            if (!std::isfinite(p.sigma_max)) throw ConfigError("sigma_max", "must be finite");
            if (!(p.slope > 0.0) || !std::isfinite(p.slope))
              throw ConfigError("slope", "must be finite and > 0 (F strictly increasing)");
            if (!std::isfinite(p.center)) throw ConfigError("center", "must be finite");
          },
          [&](const UserTable& t) { build_spline(t); },
          [&](const ConstantVol& c) {
            if (!(c.level > 0.0) || !std::isfinite(c.level))
              throw ConfigError("level", "must be finite and > 0");
          },
          [&](const ExponentialVol& e) {
            if (!allow_unbounded)
              throw ConfigError("family",
                                "exponential F is unbounded; requires allow_unbounded (unsafe)");
            if (!(e.scale > 0.0) || !(e.slope > 0.0))
              throw ConfigError("scale", "scale and slope must be > 0");
          }},
      family_);

  if (std::holds_alternative<ExponentialVol>(family_)) {
    const double inf = std::numeric_limits<double>::infinity();
    sup_f_ = sup_fp_ = sup_ffp_ = inf;
    return;
  }
  if (const auto* c = std::get_if<ConstantVol>(&family_)) {
    sup_f_ = c->level;
    return;
  }
  // F is monotone so sup|F| is its upper asymptote; derivative bounds of the
  // spline family by dense scan.
  if (const auto* p = std::get_if<BoundedSigmoid>(&family_)) {
    // F F' = (sigma_min + D s) D k s (1 - s) with s the logistic; maximise over s.
    const double D = p->sigma_max - p->sigma_min;
    sup_f_ = p->sigma_max;
    sup_fp_ = 0.25 * D * p->slope;
    const double b = 2.0 * D - 2.0 * p->sigma_min;
    const double s = (b + std::sqrt(b * b + 12.0 * D * p->sigma_min)) / (6.0 * D);
    sup_ffp_ = (p->sigma_min + D * s) * D * p->slope * s * (1.0 - s);
    return;
  }
  sup_f_ = spline_.right_level;
  const double lo = spline_.z.front() - 40.0 / spline_.left_rate;
  const double hi = spline_.z.back() + 40.0 / spline_.right_rate;
  constexpr int kScan = 200001;
  for (int i = 0; i < kScan; ++i) {
    const double z = lo + (hi - lo) * i / (kScan - 1);
    sup_fp_ = std::max(sup_fp_, std::abs(derivative(z)));
    sup_ffp_ = std::max(sup_ffp_, std::abs(f_fprime(z)));
  }
}

void VolFunction::build_spline(const UserTable& t) {
  const std::size_t n = t.z.size();
  if (n < 2 || t.sigma.size() != n)
    throw ConfigError("table", "needs >= 2 knots with matching z and sigma lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(t.z[i]) || !std::isfinite(t.sigma[i]))
      throw ConfigError("table", "non-finite knot");
    if (!(t.sigma[i] > 0.0)) throw ConfigError("table", "sigma values must be > 0");
    if (i > 0 && !(t.z[i] > t.z[i - 1]))
      throw ConfigError("table", "z knots must be strictly increasing");
    if (i > 0 && !(t.sigma[i] > t.sigma[i - 1]))
      throw ConfigError("table", "sigma values must be strictly increasing (non-monotone table)");
  }
  Spline& s = spline_;
  s.z = t.z;
  s.y = t.sigma;
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = s.z[i + 1] - s.z[i];
    d[i] = (s.y[i + 1] - s.y[i]) / h[i];
  }
  s.left_rate = 1.0 / h.front();
  s.right_rate = 1.0 / h.back();

  // Tridiagonal system for the knot curvatures M with end conditions
  // M_0 = b_L F'(z_0), M_n = -b_R F'(z_n) so the exponential tails match to C^2.
  std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0), rhs(n, 0.0);
  diag[0] = 1.0 + s.left_rate * h[0] / 3.0;
  sup[0] = s.left_rate * h[0] / 6.0;
  rhs[0] = s.left_rate * d[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    sub[i] = h[i - 1] / 6.0;
    diag[i] = (h[i - 1] + h[i]) / 3.0;
    sup[i] = h[i] / 6.0;
    rhs[i] = d[i] - d[i - 1];
  }
  diag[n - 1] = 1.0 + s.right_rate * h.back() / 3.0;
  sub[n - 1] = s.right_rate * h.back() / 6.0;
  rhs[n - 1] = -s.right_rate * d.back();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  s.m.assign(n, 0.0);
  s.m[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) s.m[i] = (rhs[i] - sup[i] * s.m[i + 1]) / diag[i];

  // F' > 0 on every interval: F' is quadratic there, check endpoints and vertex.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = s.z[i], b = s.z[i + 1];
    double zs[3] = {a, b, a};
    int cnt = 2;
    const double dm = s.m[i + 1] - s.m[i];
    if (dm != 0.0) {
      const double zv = a - s.m[i] * h[i] / dm;  // F'' = 0
      if (zv > a && zv < b) zs[cnt++] = zv;
    }
    for (int k = 0; k < cnt; ++k) {
      if (!(spline_eval(zs[k], 1) > 0.0))
        throw ConfigError("table", "spline is not strictly increasing (non-monotone table)");
    }
  }
  const double fp0 = spline_eval(s.z.front(), 1);
  const double fpn = spline_eval(s.z.back(), 1);
  s.left_amp = fp0 / s.left_rate;
  s.left_level = s.y.front() - s.left_amp;
  s.right_amp = fpn / s.right_rate;
  s.right_level = s.y.back() + s.right_amp;
  if (!(s.left_level > 0.0))
    throw ConfigError("table", "left extrapolation would reach non-positive volatility");
}

double VolFunction::spline_eval(double z, int order) const {
  const Spline& s = spline_;
  if (z < s.z.front()) {
    const double e = s.left_amp * std::exp(s.left_rate * (z - s.z.front()));
    if (order == 0) return s.left_level + e;
    return order == 1 ? s.left_rate * e : s.left_rate * s.left_rate * e;
  }
  if (z > s.z.back()) {
    const double e = s.right_amp * std::exp(-s.right_rate * (z - s.z.back()));
    if (order == 0) return s.right_level - e;
    return order == 1 ? s.right_rate * e : -s.right_rate * s.right_rate * e;
  }
  auto it = std::upper_bound(s.z.begin(), s.z.end(), z);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - s.z.begin()) - 1));
  if (i + 1 >= s.z.size()) i = s.z.size() - 2;
  const double h = s.z[i + 1] - s.z[i];
  const double A = s.z[i + 1] - z, B = z - s.z[i];
  const double mi = s.m[i], mj = s.m[i + 1];
  switch (order) {
    case 0:
      return mi * A * A * A / (6 * h) + mj * B * B * B / (6 * h) +
             (s.y[i] / h - mi * h / 6) * A + (s.y[i + 1] / h - mj * h / 6) * B;
    case 1:
      return -mi * A * A / (2 * h) + mj * B * B / (2 * h) - (s.y[i] / h - mi * h / 6) +
             (s.y[i + 1] / h - mj * h / 6);
    default:
      return mi * A / h + mj * B / h;
  }
}

double VolFunction::value(double z) const {
  return std::visit(
      Overloaded{[&](const BoundedSigmoid& p) {
                   return p.sigma_min + (p.sigma_max - p.sigma_min) * logistic(p.slope * (z - p.center));
                 },
                 [&](const UserTable&) { return spline_eval(z, 0); },
                 [&](const ConstantVol& c) { return c.level; },
                 [&](const ExponentialVol& e) { return e.scale * std::exp(e.slope * z); }},
      family_);
}

double VolFunction::derivative(double z) const {
  return std::visit(
      Overloaded{[&](const BoundedSigmoid& p) {
                   const double s = logistic(p.slope * (z - p.center));
                   return (p.sigma_max - p.sigma_min) * p.slope * s * (1.0 - s);
                 },
                 [&](const UserTable&) { return spline_eval(z, 1); },
                 [&](const ConstantVol&) { return 0.0; },
                 [&](const ExponentialVol& e) { return e.scale * e.slope * std::exp(e.slope * z); }},
      family_);
}

double VolFunction::second_derivative(double z) const {
  return std::visit(
      Overloaded{[&](const BoundedSigmoid& p) {
                   const double s = logistic(p.slope * (z - p.center));
                   return (p.sigma_max - p.sigma_min) * p.slope * p.slope * s * (1.0 - s) *
                          (1.0 - 2.0 * s);
                 },
                 [&](const UserTable&) { return spline_eval(z, 2); },
                 [&](const ConstantVol&) { return 0.0; },
                 [&](const ExponentialVol& e) {
                   return e.scale * e.slope * e.slope * std::exp(e.slope * z);
                 }},
      family_);
}

double VolFunction::sup_abs() const { return sup_f_; }
double VolFunction::sup_abs_derivative() const { return sup_fp_; }
double VolFunction::sup_abs_f_fprime() const { return sup_ffp_; }

bool VolFunction::is_constant() const { return std::holds_alternative<ConstantVol>(family_); }
bool VolFunction::is_bounded() const { return !std::holds_alternative<ExponentialVol>(family_); }
bool VolFunction::is_point_symmetric() const {
  return std::holds_alternative<BoundedSigmoid>(family_);
}

std::string VolFunction::family_name() const {
  return std::visit(Overloaded{[](const BoundedSigmoid&) { return std::string("sigmoid"); },
                               [](const UserTable&) { return std::string("table"); },
                               [](const ConstantVol&) { return std::string("constant"); },
                               [](const ExponentialVol&) { return std::string("exponential"); }},
                    family_);
}

VolFunction VolFunction::scaled(double alpha) const {
  if (!(alpha > 0.0)) throw DomainError("VolFunction::scaled: alpha must be > 0");
  return std::visit(
      Overloaded{[&](const BoundedSigmoid& p) {
                   return VolFunction(BoundedSigmoid{alpha * p.sigma_min, alpha * p.sigma_max,
                                                     p.slope, p.center});
                 },
                 [&](const UserTable& t) {
                   UserTable u = t;
                   for (auto& v : u.sigma) v *= alpha;
                   return VolFunction(u);
                 },
                 [&](const ConstantVol& c) { return VolFunction(ConstantVol{alpha * c.level}); },
                 [&](const ExponentialVol& e) {
                   return VolFunction(ExponentialVol{alpha * e.scale, e.slope}, true);
                 }},
      family_);
}

}  // namespace roughvol
