#include "brse/model.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "brse/rng.hpp"

using namespace brse;

namespace {

Dataset unit_design(std::initializer_list<double> ys) {
  const auto n = static_cast<Eigen::Index>(ys.size());
  Eigen::VectorXd y(n);
  Eigen::Index i = 0;
  for (double v : ys) y(i++) = v;
  return Dataset(Eigen::MatrixXd::Ones(n, 1), y);
}

// Central finite differences of the single-observation log-likelihood.
Eigen::VectorXd fd_score(const ModelSpec& model, const ParamPoint& theta,
                         const Observation& obs) {
  const Dataset single = Dataset::from_observations({obs});
  const int p = static_cast<int>(theta.beta.size());
  Eigen::VectorXd g(p);
  for (int j = 0; j < p; ++j) {
    const double h = 6e-6 * std::max(1.0, std::fabs(theta.beta(j)));
    ParamPoint up = theta, dn = theta;
    up.beta(j) += h;
    dn.beta(j) -= h;
    g(j) = (log_likelihood(model, up, single) - log_likelihood(model, dn, single)) / (2.0 * h);
  }
  return g;
}

// Negative finite-difference Hessian of the mean log-likelihood.
Eigen::MatrixXd fd_fisher(const ModelSpec& model, const ParamPoint& theta,
                          const Dataset& data) {
  const int p = data.p();
  const double h = 1e-3;
  Eigen::MatrixXd out(p, p);
  auto ll = [&](const Eigen::VectorXd& b) {
    ParamPoint t = theta;
    t.beta = b;
    return log_likelihood(model, t, data) / data.n();
  };
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd pp = theta.beta, pm = theta.beta, mp = theta.beta, mm = theta.beta;
      pp(i) += h; pp(j) += h;
      pm(i) += h; pm(j) -= h;
      mp(i) -= h; mp(j) += h;
      mm(i) -= h; mm(j) -= h;
      out(i, j) = -(ll(pp) - ll(pm) - ll(mp) + ll(mm)) / (4.0 * h * h);
    }
  }
  return out;
}

Observation make_obs(double y, std::initializer_list<double> xs) {
  Observation o;
  o.y = y;
  o.x.resize(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double v : xs) o.x(i++) = v;
  return o;
}

Observation make_surv_obs(double time, bool event, std::initializer_list<double> xs) {
  Observation o = make_obs(time, xs);
  o.time = time;
  o.event = event;
  return o;
}

TEST(LogLikelihood, NormalMeanStandardNormalAtZero) {
  const Dataset data = unit_design({0.0});
  const double ll = log_likelihood(ModelSpec::normal_mean(1.0), ParamPoint::scalar(0.0), data);
  EXPECT_NEAR(ll, -0.5 * std::log(2.0 * M_PI), 1e-14);
}

TEST(LogLikelihood, PoissonZeroCountUnitRate) {
  const Dataset data = unit_design({0.0});
  const double ll = log_likelihood(ModelSpec::poisson(), ParamPoint::scalar(0.0), data);
  EXPECT_NEAR(ll, -1.0, 1e-14);
}

TEST(LogLikelihood, ExponentialPhSingleEvent) {
  const Dataset data = Dataset::from_observations({make_surv_obs(2.0, true, {1.0})});
  const double ll =
      log_likelihood(ModelSpec::exponential_ph(), ParamPoint::scalar(0.0), data);
  EXPECT_NEAR(ll, -2.0, 1e-14);
}

TEST(LogLikelihood, ErrorsOnBadInputs) {
  const Dataset data = unit_design({0.0, 1.0});
  EXPECT_THROW(log_likelihood(ModelSpec::linear(),
                              ParamPoint::of(Eigen::VectorXd::Zero(2), 1.0), data),
               std::invalid_argument);
  EXPECT_THROW(log_likelihood(ModelSpec::linear(),
                              ParamPoint::of(Eigen::VectorXd::Zero(1), -1.0), data),
               std::domain_error);
  Eigen::VectorXd nan_beta(1);
  nan_beta << std::nan("");
  EXPECT_THROW(log_likelihood(ModelSpec::linear(), ParamPoint::of(nan_beta, 1.0), data),
               std::domain_error);
}

TEST(Score, LinearVanishesAtExactFit) {
  const Observation obs = make_obs(5.0, {1.0, 2.0});
  Eigen::VectorXd beta(2);
  beta << 1.0, 2.0;  // fitted value 5
  const Eigen::VectorXd g = score(ModelSpec::linear(), ParamPoint::of(beta, 2.0), obs);
  EXPECT_NEAR(g.norm(), 0.0, 1e-14);
}

TEST(Score, PoissonMatchesClosedFormAndFiniteDifference) {
  const Observation obs = make_obs(5.0, {1.0, 2.0});
  Eigen::VectorXd beta(2);
  beta << 0.0, 1.0;
  const ModelSpec model = ModelSpec::poisson();
  const ParamPoint theta = ParamPoint::of(beta);
  const Eigen::VectorXd g = score(model, theta, obs);
  const double resid = 5.0 - std::exp(2.0);
  EXPECT_NEAR(g(0), resid, 1e-10);
  EXPECT_NEAR(g(1), 2.0 * resid, 1e-10);
  const Eigen::VectorXd fd = fd_score(model, theta, obs);
  EXPECT_LT((g - fd).norm() / fd.norm(), 1e-6);
}

TEST(Score, ExponentialPhMatchesFiniteDifference) {
  const Observation obs = make_surv_obs(2.0, true, {1.0});
  const ModelSpec model = ModelSpec::exponential_ph();
  const ParamPoint theta = ParamPoint::scalar(0.0);
  const Eigen::VectorXd g = score(model, theta, obs);
  EXPECT_NEAR(g(0), -1.0, 1e-12);
  const Eigen::VectorXd fd = fd_score(model, theta, obs);
  EXPECT_LT((g - fd).norm() / fd.norm(), 1e-6);
}

TEST(Score, MismatchedObservationRejected) {
  const Observation obs = make_obs(1.0, {1.0});
  EXPECT_THROW(score(ModelSpec::exponential_ph(), ParamPoint::scalar(0.0), obs),
               std::invalid_argument);
}

TEST(Score, FiniteDifferenceAcrossFamilies) {
  Rng rng(20240811);
  for (int rep = 0; rep < 20; ++rep) {
    // linear
    {
      Observation obs = make_obs(rng.normal() * 2.0, {1.0, rng.normal()});
      Eigen::VectorXd beta(2);
      beta << rng.normal(), rng.normal();
      const ParamPoint theta = ParamPoint::of(beta, 0.5 + rng.uniform());
      const Eigen::VectorXd g = score(ModelSpec::linear(), theta, obs);
      const Eigen::VectorXd fd = fd_score(ModelSpec::linear(), theta, obs);
      EXPECT_LT((g - fd).norm() / std::max(1.0, fd.norm()), 1e-6);
    }
    // poisson
    {
      Observation obs = make_obs(static_cast<double>(rng.poisson(3.0)), {1.0, rng.normal()});
      Eigen::VectorXd beta(2);
      beta << 0.3 * rng.normal(), 0.3 * rng.normal();
      const ParamPoint theta = ParamPoint::of(beta);
      const Eigen::VectorXd g = score(ModelSpec::poisson(), theta, obs);
      const Eigen::VectorXd fd = fd_score(ModelSpec::poisson(), theta, obs);
      EXPECT_LT((g - fd).norm() / std::max(1.0, fd.norm()), 1e-6);
    }
    // exponential hazards
    {
      Observation obs = make_surv_obs(rng.exponential(1.0) + 0.05, rng.uniform() < 0.8,
                                      {1.0, rng.normal()});
      Eigen::VectorXd beta(2);
      beta << 0.3 * rng.normal(), 0.3 * rng.normal();
      const ParamPoint theta = ParamPoint::of(beta);
      const Eigen::VectorXd g = score(ModelSpec::exponential_ph(), theta, obs);
      const Eigen::VectorXd fd = fd_score(ModelSpec::exponential_ph(), theta, obs);
      EXPECT_LT((g - fd).norm() / std::max(1.0, fd.norm()), 1e-6);
    }
    // normal mean with assumed variance
    {
      Observation obs = make_obs(rng.normal() * 3.0, {1.0});
      const ParamPoint theta = ParamPoint::scalar(rng.normal());
      const ModelSpec model = ModelSpec::normal_mean(1.0);
      const Eigen::VectorXd g = score(model, theta, obs);
      const Eigen::VectorXd fd = fd_score(model, theta, obs);
      EXPECT_LT((g - fd).norm() / std::max(1.0, fd.norm()), 1e-6);
    }
  }
}

TEST(EmpiricalFisher, LinearTwoUnitRows) {
  const Dataset data = unit_design({0.0, 2.0});
  const Eigen::MatrixXd info =
      empirical_fisher(ModelSpec::linear(), ParamPoint::of(Eigen::VectorXd::Zero(1), 1.0), data);
  EXPECT_NEAR(info(0, 0), 1.0, 1e-14);
}

TEST(EmpiricalFisher, NormalMeanUnitVarianceIsOne) {
  const Dataset data = unit_design({-3.0, 7.0, 1.0});
  const Eigen::MatrixXd info =
      empirical_fisher(ModelSpec::normal_mean(1.0), ParamPoint::scalar(4.0), data);
  EXPECT_NEAR(info(0, 0), 1.0, 1e-14);
}

TEST(EmpiricalFisher, PoissonUnitDesignAtZero) {
  const Dataset data = unit_design({5.0, 0.0});
  const ModelSpec model = ModelSpec::poisson();
  const ParamPoint theta = ParamPoint::scalar(0.0);
  const Eigen::MatrixXd info = empirical_fisher(model, theta, data);
  EXPECT_NEAR(info(0, 0), 1.0, 1e-12);
  const Eigen::MatrixXd fd = fd_fisher(model, theta, data);
  EXPECT_LT(std::fabs(info(0, 0) - fd(0, 0)) / fd(0, 0), 1e-5);
}

TEST(EmpiricalFisher, MatchesFiniteDifferenceHessian) {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 8;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n), times(n);
    Eigen::ArrayXd events(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = rng.normal();
      y(i) = static_cast<double>(rng.poisson(2.0));
      times(i) = rng.exponential(1.0) + 0.05;
      events(i) = rng.uniform() < 0.8 ? 1.0 : 0.0;
    }
    Eigen::VectorXd beta(2);
    beta << 0.2 * rng.normal(), 0.2 * rng.normal();

    {
      const Dataset data(X, y);
      const ModelSpec model = ModelSpec::linear();
      const ParamPoint theta = ParamPoint::of(beta, 1.3);
      const Eigen::MatrixXd info = empirical_fisher(model, theta, data);
      const Eigen::MatrixXd fd = fd_fisher(model, theta, data);
      EXPECT_LT((info - fd).norm() / fd.norm(), 1e-5);
      EXPECT_TRUE(info.isApprox(info.transpose(), 0.0));  // exact symmetry
    }
    {
      const Dataset data(X, y);
      const ModelSpec model = ModelSpec::poisson();
      const ParamPoint theta = ParamPoint::of(beta);
      const Eigen::MatrixXd info = empirical_fisher(model, theta, data);
      const Eigen::MatrixXd fd = fd_fisher(model, theta, data);
      EXPECT_LT((info - fd).norm() / fd.norm(), 1e-5);
    }
    {
      const Dataset data(X, times, events);
      const ModelSpec model = ModelSpec::exponential_ph();
      const ParamPoint theta = ParamPoint::of(beta);
      const Eigen::MatrixXd info = empirical_fisher(model, theta, data);
      const Eigen::MatrixXd fd = fd_fisher(model, theta, data);
      EXPECT_LT((info - fd).norm() / fd.norm(), 1e-5);
    }
  }
}

TEST(MeanVariance, FamilyExamples) {
  {
    Eigen::VectorXd beta(2);
    beta << 1.0, 2.0;
    const auto [mu, v] =
        mean_and_variance_fn(ModelSpec::linear(), ParamPoint::of(beta, 1.0),
                             make_obs(0.0, {1.0, 3.0}));
    EXPECT_NEAR(mu, 7.0, 1e-14);
    EXPECT_NEAR(v, 1.0, 1e-14);
  }
  {
    const auto [mu, v] = mean_and_variance_fn(ModelSpec::poisson(), ParamPoint::scalar(0.0),
                                              make_obs(0.0, {1.0}));
    EXPECT_NEAR(mu, 1.0, 1e-14);
    EXPECT_NEAR(v, 1.0, 1e-14);
  }
  {
    const auto [mu, v] = mean_and_variance_fn(
        ModelSpec::exponential_ph(), ParamPoint::scalar(0.0), make_surv_obs(4.0, true, {1.0}));
    EXPECT_NEAR(mu, 4.0, 1e-14);
    EXPECT_NEAR(v, 4.0, 1e-14);
  }
}

TEST(MeanVariance, OverflowingPredictorIsAnError) {
  const Observation obs = make_obs(1.0, {1.0});
  EXPECT_THROW(mean_and_variance_fn(ModelSpec::poisson(), ParamPoint::scalar(701.0), obs),
               numeric_error);
  const Dataset data = unit_design({1.0});
  EXPECT_THROW(log_likelihood(ModelSpec::poisson(), ParamPoint::scalar(-701.0), data),
               numeric_error);
}

TEST(Score, LinearInResidualForCanonicalFamilies) {
  Rng rng(99);
  Eigen::VectorXd beta(2);
  beta << 0.4, -0.2;
  for (const ModelSpec& model : {ModelSpec::linear(), ModelSpec::poisson()}) {
    ParamPoint theta = ParamPoint::of(beta);
    if (has_sigma2(model.family)) theta.sigma2 = 1.7;
    for (int rep = 0; rep < 5; ++rep) {
      Observation a = make_obs(rng.normal(), {1.0, rng.normal()});
      Observation b = a, c = a;
      b.y = a.y + 1.0;
      c.y = a.y + 2.0;
      const Eigen::VectorXd ga = score(model, theta, a);
      const Eigen::VectorXd gb = score(model, theta, b);
      const Eigen::VectorXd gc = score(model, theta, c);
      // equal response increments move the score by equal steps
      EXPECT_LT(((gc - gb) - (gb - ga)).norm(), 1e-12);
    }
  }
}

TEST(Dataset, InvariantsEnforced) {
  EXPECT_THROW(Dataset(Eigen::MatrixXd::Ones(0, 1), Eigen::VectorXd(0)), std::invalid_argument);
  Eigen::VectorXd times(1), y(1);
  times << -1.0;
  y << 1.0;
  Eigen::ArrayXd events(1);
  events << 1.0;
  EXPECT_THROW(Dataset(Eigen::MatrixXd::Ones(1, 1), times, events), std::invalid_argument);
  // survival family requires survival fields, and vice versa
  const Dataset plain = unit_design({1.0});
  EXPECT_THROW(validate_model_data(ModelSpec::exponential_ph(), plain), std::invalid_argument);
  times << 1.0;
  const Dataset surv(Eigen::MatrixXd::Ones(1, 1), times, events);
  EXPECT_THROW(validate_model_data(ModelSpec::poisson(), surv), std::invalid_argument);
}

}  // namespace
