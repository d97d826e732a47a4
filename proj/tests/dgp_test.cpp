#include "brse/dgp.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace brse;

namespace {

TEST(Generate, DeterministicInSeed) {
  const DgpSpec dgp = DgpSpec::poisson_quadratic(40, 0.25);
  const Dataset a = generate(dgp, 11);
  const Dataset b = generate(dgp, 11);
  const Dataset c = generate(dgp, 12);
  EXPECT_TRUE((a.X().array() == b.X().array()).all());
  EXPECT_TRUE((a.y().array() == b.y().array()).all());
  EXPECT_FALSE((a.y().array() == c.y().array()).all());
}

TEST(Generate, LinearWellSpecifiedSlopeRecovered) {
  const DgpSpec dgp = DgpSpec::linear_quadratic(20000, 0.0);
  const Dataset data = generate(dgp, 5);
  const FreqFit fit = fit_mle(ModelSpec::linear(), data);
  EXPECT_NEAR(fit.theta_mle(1), 1.0, 0.03);
  EXPECT_NEAR(fit.theta_mle(0), 0.0, 0.05);
}

TEST(Generate, PoissonLogRateRecoversUnitSlopeWhenStraight) {
  const DgpSpec dgp = DgpSpec::poisson_quadratic(20000, 0.0);
  const Dataset data = generate(dgp, 6);
  const FreqFit fit = fit_mle(ModelSpec::poisson(), data);
  EXPECT_NEAR(fit.theta_mle(1), 1.0, 0.02);
  EXPECT_NEAR(fit.theta_mle(0), 0.0, 0.03);
}

TEST(Generate, WeibullEventCountsMatchQuadrature) {
  // Expected events from the censoring integral 50 (1 - E_u exp(-e^{b2 u} 10^k)):
  // 48.81 at kappa=1, b2=-0.5; 49.91 at the correctly specified kappa=0.8, b2=0.
  {
    const DgpSpec dgp = DgpSpec::weibull_ph(50, 1.0, -0.5);
    double events = 0.0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) events += generate(dgp, 1000 + r).events().sum();
    EXPECT_NEAR(events / reps, 48.81, 0.25);
  }
  {
    const DgpSpec dgp = DgpSpec::weibull_ph(50, 0.8, 0.0);
    double events = 0.0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) events += generate(dgp, 2000 + r).events().sum();
    EXPECT_NEAR(events / reps, 49.91, 0.1);
  }
}

TEST(Generate, FixedDesignHoldsCovariatesAcrossSeeds) {
  const DgpSpec dgp = DgpSpec::fixed_design_linear(25, 1.0);
  const Dataset a = generate(dgp, 1);
  const Dataset b = generate(dgp, 999);
  EXPECT_TRUE((a.X().array() == b.X().array()).all());
  EXPECT_FALSE((a.y().array() == b.y().array()).all());
  EXPECT_NEAR(a.X()(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(a.X()(24, 1), 3.0, 1e-15);
}

TEST(KlPoint, LinearClosedForm) {
  {
    const KlPoint kl = kl_point(DgpSpec::linear_quadratic(100, 2.0), ModelSpec::linear());
    EXPECT_NEAR(kl.theta_star(0), -3.0, 1e-12);
    EXPECT_NEAR(kl.theta_star(1), 7.0, 1e-12);
    EXPECT_EQ(kl.mcse(1), 0.0);
  }
  {
    const KlPoint kl = kl_point(DgpSpec::linear_quadratic(100, 0.0), ModelSpec::linear());
    EXPECT_NEAR(kl.theta_star(1), 1.0, 1e-12);
  }
}

TEST(KlPoint, FixedDesignProjectionMatchesHandSolve) {
  const int n = 100;
  const double a = 2.0;
  const KlPoint kl = kl_point(DgpSpec::fixed_design_linear(n, a), ModelSpec::linear());
  // independent normal-equations solve over the evenly spaced design
  double su = 0, suu = 0, sm = 0, sum_um = 0;
  for (int i = 0; i < n; ++i) {
    const double u = 3.0 * i / (n - 1.0);
    const double m = u + a * u * u;
    su += u;
    suu += u * u;
    sm += m;
    sum_um += u * m;
  }
  const double det = n * suu - su * su;
  const double slope = (n * sum_um - su * sm) / det;
  const double intercept = (sm - slope * su) / n;
  EXPECT_NEAR(kl.theta_star(1), slope, 1e-10);
  EXPECT_NEAR(kl.theta_star(0), intercept, 1e-10);
  // the fixed-design projection approaches the random-design limit
  EXPECT_NEAR(kl.theta_star(1), 7.0, 0.15);
}

TEST(KlPoint, OracleRecoversTruthUnderCorrectSpecification) {
  {
    const KlPoint kl =
        kl_point(DgpSpec::poisson_quadratic(100, 0.0), ModelSpec::poisson(), 300000);
    EXPECT_NEAR(kl.theta_star(1), 1.0, 4.0 * kl.mcse(1) + 1e-4);
    EXPECT_GT(kl.mcse(1), 0.0);
  }
  {
    const KlPoint kl =
        kl_point(DgpSpec::weibull_ph(100, 1.0, -0.5), ModelSpec::exponential_ph(), 300000);
    EXPECT_NEAR(kl.theta_star(1), -0.5, 4.0 * kl.mcse(1) + 1e-4);
  }
}

TEST(KlPoint, WeibullMisspecifiedSlopeNearShapeRatio) {
  const KlPoint kl =
      kl_point(DgpSpec::weibull_ph(100, 0.8, -0.5), ModelSpec::exponential_ph(), 300000);
  // censoring perturbs the uncensored ratio b2/kappa mildly
  EXPECT_NEAR(kl.theta_star(1), -0.625, 0.08);
}

TEST(KlPoint, OracleIsDeterministic) {
  const DgpSpec dgp = DgpSpec::poisson_quadratic(50, 0.25);
  const KlPoint a = kl_point(dgp, ModelSpec::poisson(), 100000);
  const KlPoint b = kl_point(dgp, ModelSpec::poisson(), 100000);
  EXPECT_EQ(a.theta_star(1), b.theta_star(1));
}

TEST(KlPoint, RejectsMismatchedModel) {
  EXPECT_THROW(kl_point(DgpSpec::linear_quadratic(50, 1.0), ModelSpec::poisson()),
               std::invalid_argument);
}

TEST(ModelPairing, FamiliesAndPriors) {
  EXPECT_EQ(model_for(DgpSpec::linear_quadratic(50, 1.0)).family, Family::linear);
  EXPECT_EQ(model_for(DgpSpec::poisson_quadratic(50, 0.0)).family, Family::poisson);
  EXPECT_EQ(model_for(DgpSpec::weibull_ph(50, 1.0, 0.0)).family, Family::exponential_ph);
  const PriorSpec lp = prior_for(DgpSpec::linear_quadratic(50, 1.0));
  EXPECT_NEAR(lp.beta_var(0), 1e3, 1e-12);
  EXPECT_NEAR(lp.sigma2_shape, 0.1, 1e-15);
  const PriorSpec pp = prior_for(DgpSpec::poisson_quadratic(50, 1.0));
  EXPECT_NEAR(pp.beta_var(1), 1e3, 1e-12);
}

}  // namespace
