#ifndef BRSE_PRIOR_HPP
#define BRSE_PRIOR_HPP

#include <cmath>

#include "brse/types.hpp"

namespace brse {

// Independent normal priors on each coefficient plus one canonical (shape, rate) pair
// for the residual variance: sigma^-2 ~ Gamma(shape, rate), equivalently
// sigma^2 ~ InvGamma(shape, rate). Both common prior statements convert to this form.
struct PriorSpec {
  Eigen::VectorXd beta_mean;
  Eigen::VectorXd beta_var;
  double sigma2_shape = 0.01;
  double sigma2_rate = 0.01;

  static PriorSpec defaults(int p) {
    PriorSpec prior;
    prior.beta_mean = Eigen::VectorXd::Zero(p);
    prior.beta_var = Eigen::VectorXd::Constant(p, 1e3);
    return prior;
  }

  static PriorSpec normal(Eigen::VectorXd mean, Eigen::VectorXd var) {
    PriorSpec prior;
    prior.beta_mean = std::move(mean);
    prior.beta_var = std::move(var);
    return prior;
  }

  PriorSpec& inv_gamma_sigma2(double shape, double rate) {
    sigma2_shape = shape;
    sigma2_rate = rate;
    return *this;
  }

  // Gamma(shape, rate) on the precision sigma^-2; identical canonical form.
  PriorSpec& gamma_precision(double shape, double rate) { return inv_gamma_sigma2(shape, rate); }

  void validate(int p) const {
    if (beta_mean.size() != p || beta_var.size() != p)
      throw std::invalid_argument("prior dimension mismatch");
    if (!beta_mean.allFinite()) throw std::invalid_argument("non-finite prior mean");
    if (!(beta_var.array() > 0.0).all() || !beta_var.allFinite())
      throw std::invalid_argument("prior variances must be positive and finite");
    if (!(sigma2_shape > 0.0) || !(sigma2_rate > 0.0))
      throw std::invalid_argument("sigma2 prior shape and rate must be positive");
  }

  double log_density_beta(const Eigen::VectorXd& beta) const {
    double ll = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      const double d = beta(j) - beta_mean(j);
      ll += -0.5 * std::log(2.0 * M_PI * beta_var(j)) - 0.5 * d * d / beta_var(j);
    }
    return ll;
  }

  double log_density_sigma2(double s2) const {
    if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
    return sigma2_shape * std::log(sigma2_rate) - std::lgamma(sigma2_shape) -
           (sigma2_shape + 1.0) * std::log(s2) - sigma2_rate / s2;
  }
};

}  // namespace brse

#endif  // BRSE_PRIOR_HPP
