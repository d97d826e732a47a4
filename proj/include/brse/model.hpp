#ifndef BRSE_MODEL_HPP
#define BRSE_MODEL_HPP

#include <cmath>
#include <utility>

#include "brse/types.hpp"

namespace brse {

// Linear predictors past this magnitude would overflow exp(); raised as an error
// instead of letting infinities leak into downstream matrix work.
inline constexpr double kMaxLinearPredictor = 700.0;

inline double dispersion(const ModelSpec& model, const ParamPoint& theta) {
  switch (model.family) {
    case Family::normal_mean: return model.assumed_variance;
    case Family::linear: return *theta.sigma2;
    case Family::poisson:
    case Family::exponential_ph: return 1.0;
  }
  return 1.0;
}

namespace detail {

inline void check_predictor(double eta) {
  if (std::fabs(eta) > kMaxLinearPredictor)
    throw numeric_error("linear predictor magnitude exceeds 700; exp() would overflow");
}

inline Eigen::VectorXd linear_predictor(const ParamPoint& theta, const Dataset& data) {
  Eigen::VectorXd eta = data.X() * theta.beta;
  if ((eta.array().abs() > kMaxLinearPredictor).any())
    throw numeric_error("linear predictor magnitude exceeds 700; exp() would overflow");
  return eta;
}

// Family kernel in residual form: fitted value, variance weight, and the response the
// residual is taken against (the event indicator for survival data).
struct Kernel {
  Eigen::VectorXd fitted;    // mu_i
  Eigen::VectorXd vweight;   // V_i
  Eigen::VectorXd response;  // y_i, or Delta_i for survival data
  double alpha = 1.0;        // dispersion
};

inline Kernel kernel(const ModelSpec& model, const ParamPoint& theta, const Dataset& data) {
  validate_model_data(model, data);
  validate_param(model, theta, data.p());
  Kernel k;
  k.alpha = dispersion(model, theta);
  Eigen::VectorXd eta = linear_predictor(theta, data);
  switch (model.family) {
    case Family::normal_mean:
    case Family::linear:
      k.fitted = std::move(eta);
      k.vweight = Eigen::VectorXd::Ones(data.n());
      k.response = data.y();
      break;
    case Family::poisson:
      k.fitted = eta.array().exp().matrix();
      k.vweight = k.fitted;
      k.response = data.y();
      break;
    case Family::exponential_ph:
      k.fitted = (eta.array().exp() * data.times().array()).matrix();
      k.vweight = k.fitted;
      k.response = data.events().matrix();
      break;
  }
  return k;
}

}  // namespace detail

inline double log_likelihood(const ModelSpec& model, const ParamPoint& theta,
                             const Dataset& data) {
  validate_model_data(model, data);
  validate_param(model, theta, data.p());
  const Eigen::VectorXd eta = detail::linear_predictor(theta, data);
  const int n = data.n();
  switch (model.family) {
    case Family::normal_mean:
    case Family::linear: {
      const double s2 = dispersion(model, theta);
      const double rss = (data.y() - eta).squaredNorm();
      return -0.5 * n * std::log(2.0 * M_PI * s2) - 0.5 * rss / s2;
    }
    case Family::poisson: {
      double ll = data.y().dot(eta) - eta.array().exp().sum();
      for (int i = 0; i < n; ++i) ll -= std::lgamma(data.y()(i) + 1.0);
      return ll;
    }
    case Family::exponential_ph:
      return data.events().matrix().dot(eta) -
             (eta.array().exp() * data.times().array()).sum();
  }
  return 0.0;
}

// (mu_i, V_i) for one observation; the residual underlying every score and loss is
// response - mu, where the response is Delta_i for survival data.
inline std::pair<double, double> mean_and_variance_fn(const ModelSpec& model,
                                                      const ParamPoint& theta,
                                                      const Observation& obs) {
  validate_param(model, theta, static_cast<int>(obs.x.size()));
  const double eta = obs.x.dot(theta.beta);
  detail::check_predictor(eta);
  switch (model.family) {
    case Family::normal_mean:
    case Family::linear:
      return {eta, 1.0};
    case Family::poisson: {
      const double mu = std::exp(eta);
      return {mu, mu};
    }
    case Family::exponential_ph: {
      if (!obs.time || !obs.event)
        throw std::invalid_argument("survival family requires event and time fields");
      const double mu = *obs.time * std::exp(eta);
      return {mu, mu};
    }
  }
  return {0.0, 0.0};
}

// Gradient of the single-observation log-likelihood: x * (response - mu) / alpha.
// For the linear family the gradient is with respect to beta at the supplied sigma2.
inline Eigen::VectorXd score(const ModelSpec& model, const ParamPoint& theta,
                             const Observation& obs) {
  if (is_survival(model.family) != obs.time.has_value())
    throw std::invalid_argument("observation does not match the model family");
  const auto [mu, v] = mean_and_variance_fn(model, theta, obs);
  (void)v;
  const double response = is_survival(model.family) ? (*obs.event ? 1.0 : 0.0) : obs.y;
  return obs.x * ((response - mu) / dispersion(model, theta));
}

// (1/n) sum_i x_i x_i' V_i / alpha; exactly symmetric by construction.
inline Eigen::MatrixXd empirical_fisher(const ModelSpec& model, const ParamPoint& theta,
                                        const Dataset& data) {
  const detail::Kernel k = detail::kernel(model, theta, data);
  const Eigen::VectorXd w = k.vweight / (k.alpha * data.n());
  Eigen::MatrixXd info(data.p(), data.p());
  info.setZero();
  info.selfadjointView<Eigen::Lower>().rankUpdate(
      (data.X().array().colwise() * w.array().sqrt()).matrix().transpose());
  info.triangularView<Eigen::StrictlyUpper>() = info.transpose();
  return info;
}

// Bulk score statistics shared by the estimators and the frequentist fits.
// Total score sum_i l_i'(theta).
inline Eigen::VectorXd score_sum(const ModelSpec& model, const ParamPoint& theta,
                                 const Dataset& data) {
  const detail::Kernel k = detail::kernel(model, theta, data);
  return data.X().transpose() * ((k.response - k.fitted) / k.alpha);
}

// Score outer-product mean (1/n) sum_i l_i' l_i'^T, the "meat" of the sandwich.
inline Eigen::MatrixXd score_outer_mean(const ModelSpec& model, const ParamPoint& theta,
                                        const Dataset& data) {
  const detail::Kernel k = detail::kernel(model, theta, data);
  const Eigen::ArrayXd r = (k.response - k.fitted).array() / k.alpha;
  const Eigen::VectorXd w = (r * r / data.n()).matrix();
  Eigen::MatrixXd meat(data.p(), data.p());
  meat.setZero();
  meat.selfadjointView<Eigen::Lower>().rankUpdate(
      (data.X().array().colwise() * w.array().sqrt()).matrix().transpose());
  meat.triangularView<Eigen::StrictlyUpper>() = meat.transpose();
  return meat;
}

}  // namespace brse

#endif  // BRSE_MODEL_HPP
