#include "brse/loss.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "brse/rng.hpp"

using namespace brse;

namespace {

TEST(InferenceLoss, HandCases) {
  Eigen::VectorXd theta(2), d(2);
  theta << 1.0, -1.0;
  d = theta;
  EXPECT_NEAR(inference_loss(theta, d, Eigen::MatrixXd::Identity(2, 2)).total, 0.0, 1e-14);

  Eigen::VectorXd t1(1), d1(1);
  t1 << 1.0;
  d1 << 0.0;
  EXPECT_NEAR(inference_loss(t1, d1, Eigen::MatrixXd::Identity(1, 1)).total, 1.0, 1e-14);

  Eigen::VectorXd t2(2), d2(2);
  t2 << 1.0, 1.0;
  d2 << 0.0, 0.0;
  const LossValue v = inference_loss(t2, d2, 2.0 * Eigen::MatrixXd::Identity(2, 2));
  EXPECT_NEAR(v.total, 2.0 * std::log(2.0) + 1.0, 1e-12);
  EXPECT_NEAR(v.logdet_term, 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(v.estimation_term, 1.0, 1e-12);
  EXPECT_NEAR(v.lack_of_fit_term, 0.0, 0.0);
}

TEST(InferenceLoss, RejectsNonPositiveDefinite) {
  Eigen::VectorXd t(2), d(2);
  t.setZero();
  d.setZero();
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  EXPECT_THROW(inference_loss(t, d, bad), numeric_error);
}

TEST(BalancedLoss, NormalMeanHandCase) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd y(2);
  y << 0.0, 2.0;
  const Dataset data(X, y);
  const ParamPoint theta = ParamPoint::scalar(1.0);  // the sample mean
  Eigen::VectorXd d(1);
  d << 1.0;
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  const LossValue v =
      balanced_inference_loss(ModelSpec::normal_mean(1.0), theta, d, one, one, data);
  EXPECT_NEAR(v.logdet_term, 0.0, 1e-14);
  EXPECT_NEAR(v.estimation_term, 0.0, 1e-14);
  EXPECT_NEAR(v.lack_of_fit_term, 1.0, 1e-12);
  EXPECT_NEAR(v.total, 1.0, 1e-12);
}

TEST(BalancedLoss, LackOfFitVanishesAtExactFit) {
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 1, 1, 1, 2;
  Eigen::VectorXd beta(2);
  beta << 0.5, 1.5;
  const Eigen::VectorXd y = X * beta;
  const Dataset data(X, y);
  Eigen::VectorXd d = beta;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const LossValue v = balanced_inference_loss(ModelSpec::linear(),
                                              ParamPoint::of(beta, 1.0), d, eye, eye, data);
  EXPECT_NEAR(v.lack_of_fit_term, 0.0, 1e-14);
}

TEST(BalancedLoss, ComponentsSumToTotal) {
  Rng rng(17);
  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.normal();
    y(i) = static_cast<double>(rng.poisson(2.0));
  }
  const Dataset data(X, y);
  Eigen::VectorXd theta(2), d(2);
  theta << 0.2, 0.3;
  d << 0.0, 0.1;
  Eigen::MatrixXd sigma(2, 2), omega(2, 2);
  sigma << 1.0, 0.2, 0.2, 0.8;
  omega << 1.3, -0.1, -0.1, 1.1;
  const LossValue v = balanced_inference_loss(ModelSpec::poisson(), ParamPoint::of(theta),
                                              d, sigma, omega, data);
  EXPECT_NEAR(v.total, v.logdet_term + v.estimation_term + v.lack_of_fit_term, 1e-12);
}

// The canonical-link Pearson/leverage route must agree with the generic score/Fisher
// route to near machine precision on random instances.
TEST(BalancedLoss, CanonicalRouteMatchesGenericRoute) {
  Rng rng(20240812);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 6 + static_cast<int>(rng.uniform() * 10);
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = 2.0 * rng.normal();
      y(i) = static_cast<double>(rng.poisson(std::exp(0.3 + 0.2 * X(i, 1))));
    }
    const Dataset data(X, y);
    Eigen::VectorXd theta(2), d(2);
    theta << 0.3 * rng.normal(), 0.3 * rng.normal();
    d << theta(0) + 0.2 * rng.normal(), theta(1) + 0.2 * rng.normal();
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 1 + rng.uniform(), 0.3 * rng.normal(), 0.0, 1 + rng.uniform();
    b << 1 + rng.uniform(), 0.3 * rng.normal(), 0.0, 1 + rng.uniform();
    const Eigen::MatrixXd sigma = a * a.transpose();
    const Eigen::MatrixXd omega = b * b.transpose();
    const ModelSpec model = ModelSpec::poisson();
    const LossValue generic =
        balanced_inference_loss(model, ParamPoint::of(theta), d, sigma, omega, data);
    const LossValue canonical = balanced_inference_loss_canonical(
        model, ParamPoint::of(theta), d, sigma, omega, data);
    EXPECT_LT(std::fabs(generic.total - canonical.total) / std::fabs(generic.total), 1e-10);
    EXPECT_LT(std::fabs(generic.lack_of_fit_term - canonical.lack_of_fit_term) /
                  std::fabs(generic.lack_of_fit_term),
              1e-10);
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(BalancedLoss, CanonicalRouteMatchesForLinearAndHazards) {
  Rng rng(40);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 10;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n), times(n);
    Eigen::ArrayXd events(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = rng.uniform() * 3.0;
      y(i) = X(i, 1) + rng.normal();
      times(i) = rng.exponential(0.7) + 0.01;
      events(i) = rng.uniform() < 0.9 ? 1.0 : 0.0;
    }
    Eigen::VectorXd theta(2), d(2);
    theta << 0.3 * rng.normal(), 0.5 + 0.3 * rng.normal();
    d << theta(0) + 0.1, theta(1) - 0.1;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(2, 2) * (0.5 + rng.uniform());
    Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(2, 2) * (0.5 + rng.uniform());
    {
      const Dataset data(X, y);
      const ParamPoint tl = ParamPoint::of(theta, 0.9);
      const double g =
          balanced_inference_loss(ModelSpec::linear(), tl, d, sigma, omega, data).total;
      const double c =
          balanced_inference_loss_canonical(ModelSpec::linear(), tl, d, sigma, omega, data)
              .total;
      EXPECT_LT(std::fabs(g - c) / std::fabs(g), 1e-10);
    }
    {
      const Dataset data(X, times, events);
      const ParamPoint tp = ParamPoint::of(theta);
      const double g =
          balanced_inference_loss(ModelSpec::exponential_ph(), tp, d, sigma, omega, data).total;
      const double c = balanced_inference_loss_canonical(ModelSpec::exponential_ph(), tp, d,
                                                         sigma, omega, data)
                           .total;
      EXPECT_LT(std::fabs(g - c) / std::fabs(g), 1e-10);
    }
  }
}

}  // namespace
