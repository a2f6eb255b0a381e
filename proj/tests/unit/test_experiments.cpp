#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "oracles.hpp"
#include "roughvol/error.hpp"
#include "roughvol/experiments.hpp"
#include "roughvol/parallel.hpp"

using namespace roughvol;

namespace {

ModelParams model(double eps, VolFunction f, double rho = -0.5) {
  ModelParams mp;
  mp.hurst = Hurst(0.3);
  mp.eps = eps;
  mp.rho = rho;
  mp.vol_fn = std::move(f);
  return mp;
}

VolFunction sigmoid() { return VolFunction::sigmoid(0.15, 0.3, 3.0, 0.5); }

class ThreadCap {
 public:
  explicit ThreadCap(const char* v) {
    if (const char* old = std::getenv("ROUGHVOL_THREADS")) old_ = old;
    setenv("ROUGHVOL_THREADS", v, 1);
  }
  ~ThreadCap() {
    if (old_.empty()) unsetenv("ROUGHVOL_THREADS");
    else setenv("ROUGHVOL_THREADS", old_.c_str(), 1);
  }

 private:
  std::string old_;
};

}  // namespace

TEST(Parallel, ThreadCapFromEnvironment) {
  ThreadCap cap("1");
  EXPECT_EQ(worker_count(), 1u);
}

TEST(McPrice, ConstantVolMatchesBlackScholes) {
  const ModelParams mp = model(0.05, VolFunction::constant(0.2));
  const Payoff call = Payoff::call(100);
  const MCEstimate e = mc_price(mp, call, 4000, 5);
  const double bs = oracle::bs_call(100, 100, 0.2, 1.0);
  EXPECT_NEAR(e.mean, bs, 3.5 * e.std_error);
  EXPECT_NEAR(e.raw_mean, bs, 3.5 * e.raw_std_error);
  EXPECT_EQ(e.n_paths, 4000);
}

TEST(McPrice, ConstantPayoffHasNoVariance) {
  const ModelParams mp = model(0.05, sigmoid());
  SmoothCustom one{[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }, "one"};
  const MCEstimate e = mc_price(mp, Payoff(one), 512, 1);
  EXPECT_NEAR(e.mean, 1.0, 1e-12);
  EXPECT_LT(e.std_error, 1e-12);
}

TEST(McPrice, VarianceReductionHelps) {
  const ModelParams mp = model(0.05, sigmoid());
  const Payoff call = Payoff::call(100);
  MCOptions plain;
  plain.antithetic = false;
  plain.control_variates = false;
  MCOptions anti = plain;
  anti.antithetic = true;
  const MCEstimate p = mc_price(mp, call, 4000, 3, plain);
  const MCEstimate a = mc_price(mp, call, 4000, 3, anti);
  const MCEstimate c = mc_price(mp, call, 4000, 3);
  EXPECT_LT(a.raw_std_error, p.raw_std_error);
  EXPECT_LT(c.std_error, 0.5 * c.raw_std_error);
  EXPECT_NEAR(c.mean, p.mean, 3.5 * std::hypot(c.std_error, p.std_error));
}

TEST(McPrice, DeterministicAcrossThreadCounts) {
  const ModelParams mp = model(0.05, sigmoid());
  const Payoff ramp = Payoff::ramp(100, 130, 0.05);
  MCEstimate one, many;
  {
    ThreadCap cap("1");
    one = mc_price(mp, ramp, 1024, 17);
  }
  {
    ThreadCap cap("4");
    many = mc_price(mp, ramp, 1024, 17);
  }
  EXPECT_EQ(one.mean, many.mean);
  EXPECT_EQ(one.std_error, many.std_error);
  EXPECT_NE(mc_price(mp, ramp, 1024, 18).mean, one.mean);
}

TEST(McPrice, Validation) {
  const ModelParams mp = model(0.05, sigmoid());
  EXPECT_THROW(mc_price(mp, Payoff::call(100), 0, 1), ConfigError);
}

TEST(Convergence, ConstantVolHasNoCorrection) {
  const ModelParams mp = model(0.1, VolFunction::constant(0.2));
  const ConvergenceReport r =
      convergence_study(mp, {0.1, 0.05, 0.025, 0.0125}, Payoff::ramp(100, 130, 0.05), 1000, 11);
  EXPECT_TRUE(r.common_random_numbers);
  ASSERT_EQ(r.points.size(), 4u);
  for (const auto& p : r.points) {
    EXPECT_EQ(p.q1, 0.0);
    EXPECT_EQ(p.q_eps, p.q0);
    EXPECT_LT(p.error, 4.0 * p.mc.std_error) << p.eps;
    EXPECT_NEAR(p.scaled_error, p.error / std::sqrt(p.eps), 1e-15);
  }
}

TEST(Convergence, GridValidation) {
  const ModelParams mp = model(0.1, sigmoid());
  const Payoff c = Payoff::call(100);
  EXPECT_THROW(convergence_study(mp, {0.1, 0.05, 0.025}, c, 10, 1), ConfigError);
  EXPECT_THROW(convergence_study(mp, {0.1, 0.06, 0.03, 0.015}, c, 10, 1), ConfigError);
  EXPECT_THROW(convergence_study(mp, {0.0125, 0.025, 0.05, 0.1}, c, 10, 1), ConfigError);
}

TEST(Lemmas, ConstantVolGivesZeroStatistics) {
  const ModelParams mp = model(0.05, VolFunction::constant(0.2));
  const VarthetaReport v = vartheta_check(mp, 64, 2);
  EXPECT_EQ(v.mean_scaled, 0.0);
  EXPECT_EQ(v.max_abs, 0.0);
  EXPECT_EQ(v.violations, 0);
  const RateReport phi = phi_variance_check(mp, {0.004, 0.002, 0.001, 0.0005}, 64, 2);
  for (const auto& p : phi.points) EXPECT_NEAR(p.second, 0.0, 1e-20);
  const RateReport kappa = kappa_check(mp, {0.1, 0.05, 0.025, 0.0125}, 64, 2);
  for (const auto& p : kappa.points) EXPECT_NEAR(p.second, 0.0, 1e-20);
}

TEST(Lemmas, VarthetaRespectsPathwiseBound) {
  const ModelParams mp = model(0.05, sigmoid());
  const VarthetaReport v = vartheta_check(mp, 256, 9);
  EXPECT_EQ(v.violations, 0);
  EXPECT_LE(v.max_abs, v.bound);
  EXPECT_GT(v.se_scaled, 0.0);
  EXPECT_NEAR(v.rel_dev_horizon, std::abs(v.mean_scaled - v.d_bar_horizon) / std::abs(v.d_bar_horizon), 1e-12);
}

TEST(Lemmas, KappaAndPhiHaveMeanZero) {
  const ModelParams mp = model(0.05, sigmoid());
  const RateReport kappa = kappa_check(mp, {0.1, 0.05, 0.025, 0.0125}, 800, 4);
  for (const auto& p : kappa.points) EXPECT_NEAR(p.mean, 0.0, 4.0 * p.mean_se) << p.eps;
  const RateReport phi = phi_variance_check(mp, {0.004, 0.002, 0.001, 0.0005}, 400, 4);
  for (const auto& p : phi.points) {
    EXPECT_NEAR(p.mean, 0.0, 4.0 * p.mean_se) << p.eps;
    EXPECT_GT(p.second, 0.0);
  }
}

TEST(LogLogSlope, ExactOnPowerLaw) {
  const std::vector<double> x{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 0.8));
  const auto [slope, se] = loglog_slope(x, y);
  EXPECT_NEAR(slope, 0.8, 1e-12);
  EXPECT_NEAR(se, 0.0, 1e-10);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), DomainError);
}
