#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "roughvol/error.hpp"
#include "roughvol/gaussfunc.hpp"
#include "roughvol/kernel.hpp"
#include "roughvol/quadrature.hpp"
#include "roughvol/special.hpp"

using namespace roughvol;

TEST(GaussianRules, HermiteExactForPolynomials) {
  for (std::size_t n : {5u, 40u, 160u, 400u}) {
    const quad::Rule r = quad::gauss_hermite_normal(n);
    double m0 = 0, m2 = 0, m4 = 0, m8 = 0, c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = r.nodes[i], w = r.weights[i];
      m0 += w, m2 += w * z * z, m4 += w * std::pow(z, 4), m8 += w * std::pow(z, 8), c += w * std::cos(z);
    }
    EXPECT_NEAR(m0, 1.0, 1e-14) << n;
    EXPECT_NEAR(m2, 1.0, 1e-13) << n;
    EXPECT_NEAR(m4, 3.0, 1e-13) << n;
    if (n >= 5) EXPECT_NEAR(m8, 105.0, 1e-11) << n;
    if (n >= 40) EXPECT_NEAR(c, std::exp(-0.5), 1e-15) << n;
  }
}

TEST(GaussianRules, TrapezoidConvergesGeometrically) {
  const quad::Rule r = quad::trapezoid_normal(0.2);
  double c = 0, m2 = 0;
  for (std::size_t i = 0; i < r.size(); ++i) c += r.weights[i] * std::cos(r.nodes[i]), m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
  EXPECT_NEAR(c, std::exp(-0.5), 1e-14);
  EXPECT_NEAR(m2, 1.0, 1e-14);
}

TEST(GaussianRules, ResolutionFollowsSteepness) {
  EXPECT_EQ(resolve_gaussian_rule(VolFunction::sigmoid(0.1, 0.3, 1.0), Hurst(0.3)).name, "gauss_hermite(40)");
  EXPECT_EQ(resolve_gaussian_rule(VolFunction::sigmoid(0.1, 0.3, 1.0), Hurst(0.3), 64).name, "gauss_hermite(64)");
  EXPECT_EQ(resolve_gaussian_rule(VolFunction::sigmoid(0.1, 0.3, 10.0), Hurst(0.1)).name.rfind("trapezoid", 0), 0u);
  // the resolved rule meets the moment accuracy for a steep member of the family
  const auto f = VolFunction::sigmoid(0.1, 0.3, 10.0);
  const double so = oracle::sigma_ou(0.1);
  EXPECT_NEAR(moments(f, Hurst(0.1)).mean_F2,
              oracle::gauss_1d([&](double z) { return std::pow(f.value(so * z), 2); }, 0.005), 1e-10);
  EXPECT_THROW(resolve_gaussian_rule(VolFunction(ExponentialVol{0.2, 60.0}, true), Hurst(0.3)), NumericalError);
}

TEST(VolFunction, Validation) {
  EXPECT_THROW(VolFunction::sigmoid(0.0, 0.3, 1.0), ConfigError);
  EXPECT_THROW(VolFunction::sigmoid(0.3, 0.1, 1.0), ConfigError);
  EXPECT_THROW(VolFunction::sigmoid(0.1, 0.3, 0.0), ConfigError);
  EXPECT_THROW(VolFunction(ExponentialVol{0.2, 0.5}), ConfigError);
  EXPECT_NO_THROW(VolFunction(ExponentialVol{0.2, 0.5}, true));
  EXPECT_THROW(VolFunction(UserTable{{0, 1, 2}, {0.2, 0.1, 0.3}}), ConfigError);
  EXPECT_THROW(VolFunction(UserTable{{0, 0, 2}, {0.1, 0.2, 0.3}}), ConfigError);
}

TEST(VolFunction, SigmoidDerivativesMatchDifferences) {
  const auto f = VolFunction::sigmoid(0.1, 0.3, 1.7, 0.2);
  for (double z : {-3.0, -0.5, 0.0, 0.4, 2.5}) {
    const double h = 1e-4;
    EXPECT_NEAR(f.derivative(z), (f.value(z + h) - f.value(z - h)) / (2 * h), 1e-8);
    EXPECT_NEAR(f.second_derivative(z), (f.derivative(z + h) - f.derivative(z - h)) / (2 * h), 1e-7);
  }
}

TEST(VolFunction, TableIsBoundedIncreasingC2) {
  const VolFunction f(UserTable{{-2, -1, 0, 1, 2}, {0.12, 0.15, 0.2, 0.24, 0.27}});
  EXPECT_TRUE(f.is_bounded());
  const std::vector<double> knots{0.12, 0.15, 0.2, 0.24, 0.27};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(f.value(i - 2.0), knots[i], 1e-14);
  double prev = f.value(-50);
  for (double z = -50; z <= 50; z += 0.01) {
    EXPECT_GT(f.derivative(z), 0.0);
    EXPECT_GE(f.value(z), prev);
    EXPECT_LE(f.value(z), f.sup_abs() + 1e-15);
    prev = f.value(z);
  }
  // C^2 across knots and at the ends of the table
  for (double k : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const double d = 1e-7;
    EXPECT_NEAR(f.value(k - d), f.value(k + d), 1e-6);
    EXPECT_NEAR(f.derivative(k - d), f.derivative(k + d), 1e-5);
    EXPECT_NEAR(f.second_derivative(k - d), f.second_derivative(k + d), 1e-4);
  }
}

TEST(Moments, MatchTrapezoidOracle) {
  const auto f = VolFunction::sigmoid(0.1, 0.3, 1.0);
  for (double h : {0.1, 0.3}) {
    const Moments m = moments(f, Hurst(h));
    const double so = oracle::sigma_ou(h);
    EXPECT_NEAR(m.mean_F, oracle::gauss_1d([&](double z) { return f.value(so * z); }), 1e-10);
    EXPECT_NEAR(m.mean_F2, oracle::gauss_1d([&](double z) { return std::pow(f.value(so * z), 2); }), 1e-10);
    EXPECT_NEAR(m.mean_Fp, oracle::gauss_1d([&](double z) { return f.derivative(so * z); }), 1e-10);
    EXPECT_NEAR(m.mean_Fp2, oracle::gauss_1d([&](double z) { return std::pow(f.derivative(so * z), 2); }), 1e-10);
  }
}

TEST(Moments, ConstantAndSymmetricCases) {
  const Moments c = moments(VolFunction::constant(0.2), Hurst(0.3));
  EXPECT_DOUBLE_EQ(c.mean_F, 0.2);
  EXPECT_NEAR(c.mean_F2, 0.04, 1e-15);
  EXPECT_EQ(c.mean_Fp, 0.0);
  EXPECT_EQ(c.mean_Fp2, 0.0);
  const Moments s = moments(VolFunction::sigmoid(0.1, 0.3, 2.0), Hurst(0.3));
  EXPECT_NEAR(s.mean_F, 0.2, 1e-14);
}

TEST(SigmaBar, BoundsAndJensen) {
  EXPECT_NEAR(sigma_bar(VolFunction::constant(0.2), Hurst(0.3)), 0.2, 1e-15);
  for (double h : {0.1, 0.25, 0.4}) {
    const auto f = VolFunction::sigmoid(0.1, 0.3, 1.0, 0.3);
    const double sb = sigma_bar(f, Hurst(h));
    EXPECT_GE(sb, 0.1);
    EXPECT_LE(sb, 0.3);
    EXPECT_GE(sb * sb, std::pow(moments(f, Hurst(h)).mean_F, 2));
  }
}

TEST(Psi, SpecialCorrelations) {
  const auto f = VolFunction::sigmoid(0.1, 0.3, 1.0);
  const Hurst h(0.3);
  const Moments m = moments(f, h);
  EXPECT_NEAR(psi_of_C(0.0, f, h), 0.0, 1e-14);
  EXPECT_NEAR(psi_of_C(1.0, f, h), m.mean_F2 - m.mean_F * m.mean_F, 1e-14);
  EXPECT_THROW(psi_of_C(1.01, f, h), DomainError);
  const double so = oracle::sigma_ou(0.3);
  auto fc = [&](double z) { return f.value(so * z) - m.mean_F; };
  EXPECT_NEAR(psi_of_C(0.5, f, h), oracle::gauss_2d(fc, fc, 0.5, 0.05), 1e-8);
  for (double c = 0.0; c <= 1.0; c += 0.05) EXPECT_LE(psi_of_C(c, f, h), psi_of_C(1.0, f, h) + 1e-15);
  // continuity at the degenerate branch
  EXPECT_NEAR(psi_of_C(1.0 - 2e-10, f, h), psi_of_C(1.0 - 5e-11, f, h), 1e-9);
}

TEST(CovSigma, ShortAndLongLagExpansions) {
  ModelParams mp;
  mp.hurst = Hurst(0.3);
  mp.eps = 0.1;
  mp.vol_fn = VolFunction::sigmoid(0.1, 0.3, 1.0);
  const Moments m = moments(mp.vol_fn, mp.hurst);
  const double var = m.mean_F2 - m.mean_F * m.mean_F;
  const double so2 = sigma_ou_squared(mp.hurst);
  const double h = 0.3;
  EXPECT_NEAR(cov_sigma(0.0, mp), var, 1e-14);
  const double u0 = 1e-6;
  const double c0 = cov_sigma(u0 * mp.eps, mp) / var;
  EXPECT_NEAR((1 - c0) * std::tgamma(2 * h + 1) * var / (so2 * m.mean_Fp2 * std::pow(u0, 2 * h)), 1.0, 2e-2);
  const double u1 = 1e4;
  const double c1 = cov_sigma(u1 * mp.eps, mp) / var;
  EXPECT_NEAR(c1 * gamma_fn(2 * h - 1) * var / (so2 * m.mean_Fp * m.mean_Fp * std::pow(u1, 2 * h - 2)), 1.0,
              2e-2);
}

class DBarOracle : public ::testing::TestWithParam<double> {};

TEST_P(DBarOracle, NestedTrapezoidAgreement) {
  const double h = GetParam();
  const KernelEval ke{Hurst(h)};
  const CovarianceEval ce{Hurst(h)};
  for (const auto& f : {VolFunction::sigmoid(0.1, 0.3, 1.0), VolFunction::sigmoid(0.15, 0.3, 3.0, 0.5)}) {
    const double lib = d_bar(f, ke, ce);
    const double ref =
        oracle::d_bar([&](double z) { return f.value(z); }, [&](double z) { return f.derivative(z); }, h);
    EXPECT_NEAR(lib / ref, 1.0, 1e-5);
  }
}

INSTANTIATE_TEST_SUITE_P(H, DBarOracle, ::testing::Values(0.1, 0.3));

TEST(DBar, ConstantZeroAndBound) {
  const KernelEval ke{Hurst(0.3)};
  const CovarianceEval ce{Hurst(0.3)};
  EXPECT_EQ(d_bar(VolFunction::constant(0.2), ke, ce), 0.0);
  for (double slope : {0.5, 1.0, 4.0}) {
    const auto f = VolFunction::sigmoid(0.1, 0.3, slope, 0.2);
    const double bound = ke.sigma_ou() * f.sup_abs() * f.sup_abs_f_fprime() * ke.l1_norm();
    EXPECT_LE(std::abs(d_bar(f, ke, ce)), bound);
  }
}

TEST(DBar, GaussHermiteOrderStability) {
  for (double h : {0.1, 0.25, 0.4}) {
    const auto f = VolFunction::sigmoid(0.1, 0.3, 1.0);
    const KernelEval ke{Hurst(h)};
    const CovarianceEval ce{Hurst(h)};
    EXPECT_NEAR(sigma_bar(f, Hurst(h), 80) / sigma_bar(f, Hurst(h), 40), 1.0, 1e-8);
    EXPECT_NEAR(d_bar(f, ke, ce, 80) / d_bar(f, ke, ce, 40), 1.0, 1e-8);
  }
}

TEST(DBar, ScaleEquivariance) {
  const Hurst h(0.3);
  const KernelEval ke{h};
  const CovarianceEval ce{h};
  const auto f = VolFunction::sigmoid(0.1, 0.3, 1.0, 0.4);
  const double alpha = 1.7;
  const auto g = f.scaled(alpha);
  EXPECT_NEAR(sigma_bar(g, h) / sigma_bar(f, h), alpha, 1e-12);
  EXPECT_NEAR(d_bar(g, ke, ce) / d_bar(f, ke, ce), alpha * alpha * alpha, 1e-9);
}

TEST(DBar, FiniteHorizonApproachesInfinite) {
  const Hurst h(0.3);
  const KernelEval ke{h};
  const CovarianceEval ce{h};
  const auto f = VolFunction::sigmoid(0.1, 0.3, 1.0);
  const double inf = d_bar(f, ke, ce);
  double prev_gap = 1e300;
  for (double u : {10.0, 100.0, 1e4, 1e6}) {
    const double gap = std::abs(d_bar_detailed(f, ke, ce, 40, u).value - inf);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  // the gap is dominated by Phi(0) times the kernel mass beyond U, ~ U^{H-1/2}
  const double g4 = d_bar_detailed(f, ke, ce, 40, 1e4).value - inf;
  const double g6 = d_bar_detailed(f, ke, ce, 40, 1e6).value - inf;
  EXPECT_NEAR(g6 / g4, std::pow(100.0, h.value() - 0.5), 1e-2);
}

TEST(GroupParams, Consistency) {
  ModelParams mp;
  mp.vol_fn = VolFunction::constant(0.2);
  GroupParams gp = group_params(mp);
  EXPECT_NEAR(gp.sigma_bar, 0.2, 1e-15);
  EXPECT_NEAR(gp.tau_bar, 50.0, 1e-12);
  EXPECT_EQ(gp.d_bar, 0.0);
  EXPECT_NEAR(gp.var_F, 0.0, 1e-16);

  mp.vol_fn = VolFunction::sigmoid(0.1, 0.3, 1.0);
  gp = group_params(mp);
  EXPECT_TRUE(std::isfinite(gp.d_bar));
  EXPECT_NEAR(gp.tau_bar, 2.0 / (gp.sigma_bar * gp.sigma_bar), 1e-12);
  EXPECT_NEAR(gp.var_F, gp.mean_F2 - gp.mean_F * gp.mean_F, 1e-12);
  const GroupParams again = group_params(mp);
  EXPECT_EQ(gp.d_bar, again.d_bar);
  EXPECT_EQ(gp.sigma_bar, again.sigma_bar);
}
