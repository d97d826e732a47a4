#ifndef BRSE_FREQ_HPP
#define BRSE_FREQ_HPP

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <optional>

#include "brse/model.hpp"
#include "brse/types.hpp"

namespace brse {

struct FreqFit {
  Eigen::VectorXd theta_mle;
  std::optional<double> sigma2_mle;      // linear family: RSS/n
  Eigen::VectorXd model_se;              // sqrt diag (n I_n(theta_hat))^-1
  Eigen::MatrixXd sandwich_cov;          // estimate of Var(theta_hat)
  Eigen::VectorXd robust_se;             // sqrt diag sandwich_cov
  bool converged = false;
  int iterations = 0;

  ParamPoint param() const {
    ParamPoint theta{theta_mle, std::nullopt};
    if (sigma2_mle) theta.sigma2 = *sigma2_mle;
    return theta;
  }
};

namespace detail {

inline void require_estimable(const Dataset& data) {
  if (data.n() <= data.p())
    throw std::invalid_argument("estimation requires more observations than covariates");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X());
  if (qr.rank() < data.p()) throw numeric_error("rank-deficient design matrix");
}

inline double guarded_log_likelihood(const ModelSpec& model, const ParamPoint& theta,
                                     const Dataset& data) {
  try {
    return log_likelihood(model, theta, data);
  } catch (const numeric_error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

// HC0 sandwich at the fitted parameter: (1/n) I_n^-1 [(1/n) sum l l'] I_n^-1.
inline Eigen::MatrixXd sandwich(const ModelSpec& model, const FreqFit& fit,
                                const Dataset& data) {
  if (!fit.converged) throw numeric_error("sandwich requires a converged fit");
  const ParamPoint theta = fit.param();
  const Eigen::MatrixXd info = empirical_fisher(model, theta, data);
  const Eigen::MatrixXd meat = score_outer_mean(model, theta, data);
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
    throw numeric_error("singular empirical Fisher information at the MLE");
  const Eigen::MatrixXd half = llt.solve(meat);
  Eigen::MatrixXd cov = llt.solve(half.transpose()).transpose() / data.n();
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

// Maximum likelihood: closed form for the normal families, Newton-Raphson with
// step-halving on the concave Poisson / exponential-hazards likelihoods.
inline FreqFit fit_mle(const ModelSpec& model, const Dataset& data, double tol = 1e-8,
                       int max_iter = 100) {
  validate_model_data(model, data);
  detail::require_estimable(data);
  const int n = data.n();
  const int p = data.p();

  FreqFit fit;
  switch (model.family) {
    case Family::normal_mean: {
      fit.theta_mle = Eigen::VectorXd::Constant(1, data.y().mean());
      fit.converged = true;
      break;
    }
    case Family::linear: {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X());
      fit.theta_mle = qr.solve(data.y());
      const double rss = (data.y() - data.X() * fit.theta_mle).squaredNorm();
      fit.sigma2_mle = rss / n;
      if (!(*fit.sigma2_mle > 0.0)) throw numeric_error("degenerate zero-residual fit");
      fit.converged = true;
      break;
    }
    case Family::poisson:
    case Family::exponential_ph: {
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
      double ll = detail::guarded_log_likelihood(model, ParamPoint::of(beta), data);
      for (int it = 1; it <= max_iter; ++it) {
        fit.iterations = it;
        const ParamPoint theta = ParamPoint::of(beta);
        const Eigen::VectorXd g = score_sum(model, theta, data);
        if ((g / n).lpNorm<Eigen::Infinity>() < tol) {
          fit.converged = true;
          break;
        }
        const Eigen::MatrixXd info = empirical_fisher(model, theta, data);
        Eigen::LLT<Eigen::MatrixXd> llt(info * n);
        if (llt.info() != Eigen::Success)
          throw numeric_error("singular information matrix during Newton iteration");
        const Eigen::VectorXd step = llt.solve(g);
        // acceptance tolerance is relative: near the optimum the improvement from the
        // final Newton step falls below the rounding resolution of the log-likelihood
        const double slack = 1e-11 * (1.0 + std::fabs(ll));
        double scale = 1.0;
        Eigen::VectorXd cand;
        double cand_ll = -std::numeric_limits<double>::infinity();
        for (int h = 0; h < 40; ++h) {
          cand = beta + scale * step;
          cand_ll = detail::guarded_log_likelihood(model, ParamPoint::of(cand), data);
          if (cand_ll > ll - slack) break;
          scale *= 0.5;
        }
        beta = cand;
        ll = cand_ll;
        if (beta.norm() > 1e3)
          throw numeric_error("diverging coefficient estimates (possible separation)");
      }
      if (!fit.converged) throw numeric_error("Newton iteration did not converge");
      fit.theta_mle = beta;
      break;
    }
  }

  const ParamPoint theta = fit.param();
  const Eigen::MatrixXd info = empirical_fisher(model, theta, data);
  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(info * n));
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
    throw numeric_error("singular empirical Fisher information at the MLE");
  fit.model_se = llt.solve(Eigen::MatrixXd::Identity(p, p)).diagonal().array().sqrt();
  fit.sandwich_cov = sandwich(model, fit, data);
  fit.robust_se = fit.sandwich_cov.diagonal().array().sqrt();
  return fit;
}

}  // namespace brse

#endif  // BRSE_FREQ_HPP
