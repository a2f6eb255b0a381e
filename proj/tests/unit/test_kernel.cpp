#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "oracles.hpp"
#include "roughvol/error.hpp"
#include "roughvol/kernel.hpp"
#include "roughvol/special.hpp"

using namespace roughvol;

TEST(Hurst, RejectsOutsideRoughRegime) {
  EXPECT_THROW(Hurst(0.0), DomainError);
  EXPECT_THROW(Hurst(0.5), DomainError);
  EXPECT_THROW(Hurst(0.7), DomainError);
  EXPECT_NO_THROW(Hurst(0.25));
}

TEST(SigmaOu, ClosedFormValues) {
  EXPECT_NEAR(sigma_ou_squared(Hurst(0.25)), 1.0 / std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(sigma_ou_squared(Hurst(0.1)), std::numbers::phi, 1e-12);  // 1/(2 sin(pi/10))
  EXPECT_NEAR(sigma_ou_squared(Hurst(0.4999999)), 0.5, 1e-6);
  for (double h : {0.1, 0.25, 0.4}) {
    const double s = sigma_ou(Hurst(h));
    EXPECT_NEAR(s * s, 0.5 / std::sin(std::numbers::pi * h), 1e-12);
    // sigma_ou^2 = Gamma(2H+1) sigma_H^2 / 2
    EXPECT_NEAR(s * s, std::tgamma(2 * h + 1) * std::pow(sigma_h(Hurst(h)), 2) / 2, 1e-12);
  }
}

class KernelByHurst : public ::testing::TestWithParam<double> {};

TEST_P(KernelByHurst, MatchesDirectQuadrature) {
  const double h = GetParam();
  const KernelEval ke{Hurst(h)};
  for (double t : {1e-6, 1e-3, 0.1, 0.5, 0.999, 1.001, 2.0, 5.0, 20.0, 39.0, 41.0, 100.0})
    EXPECT_NEAR(kernel_K(t, ke), oracle::kernel(t, h), 1e-10 * std::max(1.0, std::abs(oracle::kernel(t, h))))
        << "t=" << t;
}

TEST_P(KernelByHurst, FormsAgreeAtSplitPoint) {
  const KernelEval ke{Hurst(GetParam())};
  const double s = ke.split_point();
  EXPECT_NEAR(ke.small_time_form(s), ke.large_time_form(s), 10 * ke.quad_tol());
}

TEST_P(KernelByHurst, SingularAtOrigin) {
  const KernelEval ke{Hurst(GetParam())};
  EXPECT_THROW(kernel_K(0.0, ke), DomainError);
}

TEST_P(KernelByHurst, SmallAndLargeTimeAsymptotics) {
  const double h = GetParam();
  const KernelEval ke{Hurst(h)};
  const double so = sigma_ou(Hurst(h));
  const double t_small = 1e-9;
  EXPECT_NEAR(kernel_K(t_small, ke) * so * std::tgamma(h + 0.5) * std::pow(t_small, 0.5 - h), 1.0, 1e-3);
  const double t_large = 1e7;
  EXPECT_NEAR(kernel_K(t_large, ke) * so * gamma_fn(h - 0.5) * std::pow(t_large, 1.5 - h), 1.0, 1e-3);
}

TEST_P(KernelByHurst, UnitL2Norm) {
  const KernelEval ke{Hurst(GetParam())};
  EXPECT_NEAR(ke.l2_norm_squared(), 1.0, 1e-6);
  EXPECT_NEAR(ke.l2_head(3.0) + ke.l2_tail(3.0), 1.0, 1e-8);
}

TEST_P(KernelByHurst, AntiderivativeAndMass) {
  const double h = GetParam();
  const KernelEval ke{Hurst(h)};
  boost::math::quadrature::tanh_sinh<double> ts;
  const double direct = ts.integrate([&](double u) { return u <= 0 ? 0.0 : oracle::kernel(u, h); }, 0.0, 2.0);
  EXPECT_NEAR(ke.antiderivative(2.0), direct, 1e-8);
  EXPECT_NEAR(ke.mass(0.5, 2.0), ke.antiderivative(2.0) - ke.antiderivative(0.5), 1e-10);
  // total mass is zero; the remainder decays like U^{H-1/2}
  const double u = 1e8;
  const double rem = std::pow(u, h - 0.5) / ((0.5 - h) * oracle::sigma_ou(h) * gamma_fn(h - 0.5));
  EXPECT_NEAR(ke.antiderivative(u) / -rem, 1.0, 1e-3);
}

TEST_P(KernelByHurst, CovarianceRepresentationsAgree) {
  const Hurst h(GetParam());
  const CovarianceEval td(h, CovRepr::TimeDomain), sp(h, CovRepr::Spectral);
  for (double s : {0.01, 0.1, 1.0, 5.0, 10.0}) {
    EXPECT_NEAR(td(s), sp(s), 1e-6) << "s=" << s;
    EXPECT_NEAR(td(s), oracle::cov_z(s, h.value()), 1e-9) << "s=" << s;
  }
}

TEST_P(KernelByHurst, CovarianceBasicProperties) {
  const double h = GetParam();
  const CovarianceEval ce{Hurst(h)};
  EXPECT_DOUBLE_EQ(cov_CZ(0.0, ce), 1.0);
  for (double s : {0.05, 0.7, 3.0, 30.0}) {
    EXPECT_DOUBLE_EQ(cov_CZ(s, ce), cov_CZ(-s, ce));
    EXPECT_LE(std::abs(cov_CZ(s, ce)), 1.0);
  }
  // short-range and long-range asymptotics
  const double s0 = 1e-5;
  EXPECT_NEAR((1 - cov_CZ(s0, ce)) * std::tgamma(2 * h + 1) / std::pow(s0, 2 * h), 1.0, 2e-2);
  const double s1 = 1e4;
  EXPECT_NEAR(cov_CZ(s1, ce) * gamma_fn(2 * h - 1) / std::pow(s1, 2 * h - 2), 1.0, 1e-2);
  // eventually negative (Gamma(2H-1) < 0)
  EXPECT_LT(cov_CZ(100.0, ce), 0.0);
}

TEST_P(KernelByHurst, CovarianceIntegrable) {
  const CovarianceEval ce{Hurst(GetParam())};
  // |C_Z| ~ s^{2H-2}/|Gamma(2H-1)|, so the tail beyond S is S^{2H-1}/((1-2H)|Gamma(2H-1)|)
  const double h = GetParam(), s0 = 1e4;
  boost::math::quadrature::exp_sinh<double> es;
  const double tail = es.integrate([&](double s) { return std::abs(cov_CZ(s + s0, ce)); });
  EXPECT_NEAR(tail * (1 - 2 * h) * std::abs(gamma_fn(2 * h - 1)) / std::pow(s0, 2 * h - 1), 1.0, 2e-2);
  EXPECT_LT(std::abs(cov_CZ(2e6, ce)) * 2e6, std::abs(cov_CZ(1e6, ce)) * 1e6);
}

TEST_P(KernelByHurst, CovarianceMatrixPositiveDefinite) {
  const CovarianceEval ce{Hurst(GetParam())};
  const int n = 256;
  const double eps = 0.05, dt = eps / 8;
  const double so2 = sigma_ou_squared(ce.hurst());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = so2 * cov_CZ(std::abs(i - j) * dt / eps, ce);
  m.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  EXPECT_EQ(llt.info(), Eigen::Success);
}

INSTANTIATE_TEST_SUITE_P(H, KernelByHurst, ::testing::Values(0.1, 0.25, 0.3, 0.4));

TEST(CovRL, LimitsAndConvergence) {
  const KernelEval ke{Hurst(0.3)};
  const CovarianceEval ce{Hurst(0.3)};
  EXPECT_EQ(cov_RL(0.0, 1.0, ke), 0.0);
  EXPECT_NEAR(cov_RL(50.0, 1.0, ke), cov_CZ(1.0, ce), 1e-3);
  // monotone approach of the variance
  double prev = 0.0;
  for (double t : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
    const double v = cov_RL(t, 0.0, ke);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_NEAR(prev, 1.0, 1e-3);
  // direct oracle: int_0^t K(u) K(u + s) du
  boost::math::quadrature::tanh_sinh<double> ts;
  const double t = 3.0, s = 0.7;
  const double direct = ts.integrate(
      [&](double u) { return u <= 0 ? 0.0 : oracle::kernel(u, 0.3) * oracle::kernel(u + s, 0.3); }, 0.0, t);
  EXPECT_NEAR(cov_RL(t, s, ke), direct, 1e-8);
}
