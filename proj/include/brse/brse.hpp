#ifndef BRSE_BRSE_HPP
#define BRSE_BRSE_HPP

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "brse/model.hpp"
#include "brse/posterior.hpp"
#include "brse/types.hpp"

namespace brse {

// Inverse standard normal CDF (Wichura's PPND16 rational approximations).
inline double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::invalid_argument("quantile probability must lie in (0, 1)");
  const double q = prob - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? prob : 1.0 - prob;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

// A_n(theta) = [(1/n) sum_i l_i' l_i'^T] I_n(theta)^-1, the per-draw term whose
// posterior average is the robust correction matrix.
inline Eigen::MatrixXd sandwich_kernel(const ModelSpec& model, const ParamPoint& theta,
                                       const Dataset& data) {
  const Eigen::MatrixXd meat = score_outer_mean(model, theta, data);
  const Eigen::MatrixXd info = empirical_fisher(model, theta, data);
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
    throw numeric_error("empirical Fisher information is singular or ill-conditioned");
  // meat * info^-1 = (info^-1 * meat)' since both factors are symmetric.
  return llt.solve(meat).transpose();
}

inline ParamPoint draw_param(const PosteriorSample& sample, int s) {
  ParamPoint theta{sample.draws.row(s).transpose(), std::nullopt};
  if (sample.sigma2_draws) theta.sigma2 = (*sample.sigma2_draws)(s);
  return theta;
}

// Posterior average of A_n over all retained draws from all chains, equally weighted,
// accumulated in draw order.
inline Eigen::MatrixXd omega_hat(const ModelSpec& model, const PosteriorSample& sample,
                                 const Dataset& data) {
  if (sample.size() < 1) throw std::invalid_argument("empty posterior sample");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(data.p(), data.p());
  for (int s = 0; s < sample.size(); ++s) {
    try {
      acc += sandwich_kernel(model, draw_param(sample, s), data);
    } catch (const numeric_error& e) {
      throw numeric_error(std::string(e.what()) + " at posterior draw " + std::to_string(s));
    }
  }
  return acc / sample.size();
}

struct SigmaHat {
  Eigen::MatrixXd raw;           // posterior covariance times omega, exact product
  Eigen::MatrixXd symmetrized;   // (raw + raw') / 2
  std::vector<int> nonpositive_diag;
};

inline SigmaHat sigma_hat(const PosteriorSample& sample, const Eigen::MatrixXd& omega) {
  SigmaHat out;
  out.raw = posterior_cov(sample) * omega;
  out.symmetrized = 0.5 * (out.raw + out.raw.transpose());
  for (int j = 0; j < out.raw.rows(); ++j)
    if (!(out.raw(j, j) > 0.0)) out.nonpositive_diag.push_back(j);
  return out;
}

// Posterior mean of the average squared Pearson residual (1/n) sum_i r_i^2 / (alpha V_i);
// the scalar correction of the quasi-likelihood variant. GLM families only.
inline double quasi_omega(const ModelSpec& model, const PosteriorSample& sample,
                          const Dataset& data) {
  if (!is_glm(model.family))
    throw std::invalid_argument("quasi-likelihood correction requires a GLM family");
  if (sample.size() < 1) throw std::invalid_argument("empty posterior sample");
  double acc = 0.0;
  for (int s = 0; s < sample.size(); ++s) {
    const detail::Kernel k = detail::kernel(model, draw_param(sample, s), data);
    const Eigen::ArrayXd r = (k.response - k.fitted).array();
    acc += (r * r / (k.alpha * k.vweight.array())).mean();
  }
  return acc / sample.size();
}

struct ClosedFormNormalMean {
  double d_hat = 0.0;
  double omega_hat = 0.0;
  double sigma2_hat = 0.0;
};

// Exact Bayes rules for the normal-mean model with assumed unit variance and a
// N(mu, eta2) prior; the sampler-free oracle for the full pipeline.
inline ClosedFormNormalMean closed_form_normal_mean(const Dataset& data, double mu,
                                                    double eta2) {
  if (!(eta2 > 0.0)) throw std::invalid_argument("prior variance must be positive");
  const int n = data.n();
  const double ybar = data.y().mean();
  const double ss = (data.y().array() - ybar).square().sum();
  const double denom = n * eta2 + 1.0;
  ClosedFormNormalMean out;
  out.d_hat = (mu + n * eta2 * ybar) / denom;
  out.omega_hat = ss / n + eta2 / denom + std::pow((mu - ybar) / denom, 2);
  out.sigma2_hat = eta2 * ss / (n * denom) + std::pow(eta2 / denom, 2) +
                   eta2 * std::pow(mu - ybar, 2) / std::pow(denom, 3);
  return out;
}

struct Interval {
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
};

struct CoefficientIntervals {
  Interval credible;
  Interval robust;
};

struct BrseResult {
  Eigen::VectorXd d_hat;
  Eigen::MatrixXd omega_hat;
  Eigen::MatrixXd sigma_hat;          // posterior covariance times omega, reported raw
  Eigen::MatrixXd symmetrized_sigma;  // (sigma_hat + sigma_hat') / 2
  Eigen::MatrixXd post_cov;
  Eigen::VectorXd post_sd;
  Eigen::VectorXd brse;               // sqrt diag sigma_hat; NaN where the diagonal is nonpositive
  double level = 0.95;
  std::vector<CoefficientIntervals> intervals;
  std::vector<int> nonpositive_diag;  // error state: carried, never clipped

  bool ok() const { return nonpositive_diag.empty(); }
};

// Normal-approximation interval pairs at a new level from an assembled result:
// credible d +- z post_sd, robust d +- z brse.
inline std::vector<CoefficientIntervals> brse_intervals(const BrseResult& result,
                                                        double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("interval level must lie in (0, 1)");
  const double z = normal_quantile(0.5 + level / 2.0);
  std::vector<CoefficientIntervals> out(static_cast<std::size_t>(result.d_hat.size()));
  for (Eigen::Index j = 0; j < result.d_hat.size(); ++j) {
    auto& pair = out[static_cast<std::size_t>(j)];
    pair.credible = {result.d_hat(j) - z * result.post_sd(j),
                     result.d_hat(j) + z * result.post_sd(j)};
    const double se = result.brse(j);
    if (std::isfinite(se)) {
      pair.robust = {result.d_hat(j) - z * se, result.d_hat(j) + z * se};
    }
  }
  return out;
}

// Full set of Bayes rules and summaries from a posterior sample.
// quantile_credible switches the credible interval to empirical posterior quantiles.
inline BrseResult brse_from_sample(const ModelSpec& model, const PosteriorSample& sample,
                                   const Dataset& data, double level = 0.95,
                                   bool quantile_credible = false) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("interval level must lie in (0, 1)");
  BrseResult result;
  result.level = level;
  result.d_hat = posterior_mean(sample);
  result.omega_hat = omega_hat(model, sample, data);
  result.post_cov = posterior_cov(sample);
  result.sigma_hat = result.post_cov * result.omega_hat;
  result.symmetrized_sigma = 0.5 * (result.sigma_hat + result.sigma_hat.transpose());
  result.post_sd = result.post_cov.diagonal().array().sqrt();
  result.brse.resize(data.p());
  for (int j = 0; j < data.p(); ++j) {
    const double dj = result.sigma_hat(j, j);
    if (dj > 0.0) {
      result.brse(j) = std::sqrt(dj);
    } else {
      result.brse(j) = std::numeric_limits<double>::quiet_NaN();
      result.nonpositive_diag.push_back(j);
    }
  }
  result.intervals = brse_intervals(result, level);
  if (quantile_credible) {
    const double alpha = 1.0 - level;
    for (int j = 0; j < data.p(); ++j) {
      std::vector<double> col(sample.draws.col(j).data(),
                              sample.draws.col(j).data() + sample.size());
      std::sort(col.begin(), col.end());
      auto quantile = [&](double q) {
        const double h = q * (col.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, col.size() - 1);
        return col[lo] + (h - lo) * (col[hi] - col[lo]);
      };
      result.intervals[static_cast<std::size_t>(j)].credible = {quantile(alpha / 2.0),
                                                                quantile(1.0 - alpha / 2.0)};
    }
  }
  return result;
}

}  // namespace brse

#endif  // BRSE_BRSE_HPP
