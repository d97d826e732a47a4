#ifndef BRSE_POSTERIOR_HPP
#define BRSE_POSTERIOR_HPP

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "brse/diagnostics.hpp"
#include "brse/freq.hpp"
#include "brse/model.hpp"
#include "brse/prior.hpp"
#include "brse/rng.hpp"
#include "brse/types.hpp"

namespace brse {

struct McmcConfig {
  int n_chains = 3;
  int n_iter = 30000;
  int n_burnin = 18000;
  int thin = 1;
  std::uint64_t seed = 1;
  double target_accept = 0.35;
  int adapt_window = 50;

  int retained_per_chain() const { return (n_iter - n_burnin) / thin; }

  void validate() const {
    if (n_chains < 1) throw std::invalid_argument("n_chains must be positive");
    if (n_iter < 1) throw std::invalid_argument("n_iter must be positive");
    if (n_burnin < 0 || n_burnin >= n_iter)
      throw std::invalid_argument("n_burnin must lie in [0, n_iter)");
    if (thin < 1) throw std::invalid_argument("thin must be positive");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw std::invalid_argument("target acceptance rate must lie in (0, 1)");
    if (adapt_window < 1) throw std::invalid_argument("adaptation window must be positive");
    if (retained_per_chain() < 1)
      throw std::invalid_argument("no draws would be retained under this configuration");
  }
};

struct PosteriorSample {
  Eigen::MatrixXd draws;                        // retained beta draws, chain-major
  std::optional<Eigen::VectorXd> sigma2_draws;  // linear family only
  std::vector<int> chain_ids;
  int n_chains = 1;
  int retained_per_chain = 0;
  int thin = 1;
  int n_burnin = 0;
  ChainDiagnostics diagnostics;

  int size() const { return static_cast<int>(draws.rows()); }
  int dim() const { return static_cast<int>(draws.cols()); }
};

inline Eigen::VectorXd posterior_mean(const PosteriorSample& s) {
  if (s.size() < 1) throw std::invalid_argument("empty posterior sample");
  return s.draws.colwise().mean();
}

inline Eigen::MatrixXd posterior_cov(const PosteriorSample& s) {
  if (s.size() < 2) throw std::invalid_argument("posterior covariance requires at least two draws");
  const Eigen::MatrixXd centered = s.draws.rowwise() - s.draws.colwise().mean();
  Eigen::MatrixXd cov(s.dim(), s.dim());
  cov.setZero();
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                 1.0 / (s.size() - 1));
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return cov;
}

// Log posterior density up to the evidence constant. Invalid parameter values
// (nonpositive sigma2, overflowing predictors) give -inf; NaN inputs are errors.
inline double log_posterior(const ModelSpec& model, const PriorSpec& prior,
                            const ParamPoint& theta, const Dataset& data) {
  validate_model_data(model, data);
  prior.validate(data.p());
  if (theta.beta.size() != data.p()) throw std::invalid_argument("parameter dimension mismatch");
  if (theta.beta.hasNaN()) throw std::domain_error("NaN parameter value");
  if (has_sigma2(model.family)) {
    if (!theta.sigma2) throw std::invalid_argument("linear family requires sigma2");
    if (std::isnan(*theta.sigma2)) throw std::domain_error("NaN sigma2");
    if (!(*theta.sigma2 > 0.0)) return -std::numeric_limits<double>::infinity();
  } else if (theta.sigma2) {
    throw std::invalid_argument("sigma2 is only meaningful for the linear family");
  }
  if (!theta.beta.allFinite()) return -std::numeric_limits<double>::infinity();

  double ll;
  try {
    ll = log_likelihood(model, theta, data);
  } catch (const numeric_error&) {
    return -std::numeric_limits<double>::infinity();
  }
  double lp = prior.log_density_beta(theta.beta);
  if (has_sigma2(model.family)) lp += prior.log_density_sigma2(*theta.sigma2);
  return ll + lp;
}

namespace detail {

// Log target for the Metropolis kernel, dropping terms constant in beta.
inline double reduced_log_target(const ModelSpec& model, const PriorSpec& prior,
                                 const Dataset& data, const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = data.X() * beta;
  if ((eta.array().abs() > kMaxLinearPredictor).any())
    return -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  switch (model.family) {
    case Family::poisson:
      ll = data.y().dot(eta) - eta.array().exp().sum();
      break;
    case Family::exponential_ph:
      ll = data.events().matrix().dot(eta) - (eta.array().exp() * data.times().array()).sum();
      break;
    default:
      throw std::invalid_argument("Metropolis kernel is for the poisson and hazards families");
  }
  const Eigen::ArrayXd d = (beta - prior.beta_mean).array();
  return ll - 0.5 * (d * d / prior.beta_var.array()).sum();
}

struct ChainOutput {
  Eigen::MatrixXd beta;    // retained x p
  Eigen::VectorXd sigma2;  // linear family only
  double acceptance = std::numeric_limits<double>::quiet_NaN();
};

inline ChainOutput run_conjugate_normal_mean_chain(const ModelSpec& model,
                                                   const PriorSpec& prior,
                                                   const Dataset& data,
                                                   const McmcConfig& cfg, int chain) {
  const double v = model.assumed_variance;
  const double mu0 = prior.beta_mean(0);
  const double eta2 = prior.beta_var(0);
  const int n = data.n();
  const double prec = 1.0 / eta2 + n / v;
  const double mean = (mu0 / eta2 + data.y().sum() / v) / prec;
  const double sd = std::sqrt(1.0 / prec);

  Rng rng(derive_seed(cfg.seed, 0xA11CEULL, chain));
  const int keep = cfg.retained_per_chain();
  ChainOutput out;
  out.beta.resize(keep, 1);
  // The exact posterior is sampled directly; burn-in and thinning are honored so the
  // draw count matches the configuration.
  int stored = 0;
  for (int iter = 0; iter < cfg.n_iter && stored < keep; ++iter) {
    const double draw = mean + sd * rng.normal();
    if (iter >= cfg.n_burnin && (iter - cfg.n_burnin) % cfg.thin == 0) out.beta(stored++, 0) = draw;
  }
  return out;
}

inline ChainOutput run_linear_gibbs_chain(const PriorSpec& prior, const Dataset& data,
                                          const McmcConfig& cfg, double sigma2_init,
                                          int chain) {
  const int n = data.n();
  const int p = data.p();
  const Eigen::MatrixXd xtx = data.X().transpose() * data.X();
  const Eigen::VectorXd xty = data.X().transpose() * data.y();
  const Eigen::VectorXd prior_prec = prior.beta_var.cwiseInverse();
  const Eigen::VectorXd prior_rhs = prior.beta_mean.cwiseQuotient(prior.beta_var);
  const double shape = prior.sigma2_shape + 0.5 * n;

  Rng rng(derive_seed(cfg.seed, 0x61BB5ULL, chain));
  const int keep = cfg.retained_per_chain();
  ChainOutput out;
  out.beta.resize(keep, p);
  out.sigma2.resize(keep);

  double s2 = sigma2_init;
  Eigen::VectorXd beta(p), z(p);
  int stored = 0;
  for (int iter = 0; iter < cfg.n_iter && stored < keep; ++iter) {
    // beta | sigma2: exact multivariate normal
    Eigen::MatrixXd lambda = xtx / s2;
    lambda.diagonal() += prior_prec;
    Eigen::LLT<Eigen::MatrixXd> llt(lambda);
    if (llt.info() != Eigen::Success)
      throw numeric_error("conditional precision matrix is not positive definite");
    const Eigen::VectorXd m = llt.solve(xty / s2 + prior_rhs);
    for (int j = 0; j < p; ++j) z(j) = rng.normal();
    beta = m + llt.matrixU().solve(z);

    // sigma2 | beta: exact inverse-gamma
    const double rss = (data.y() - data.X() * beta).squaredNorm();
    s2 = 1.0 / rng.gamma(shape, prior.sigma2_rate + 0.5 * rss);

    if (iter >= cfg.n_burnin && (iter - cfg.n_burnin) % cfg.thin == 0) {
      out.beta.row(stored) = beta.transpose();
      out.sigma2(stored) = s2;
      ++stored;
    }
  }
  return out;
}

inline ChainOutput run_metropolis_chain(const ModelSpec& model, const PriorSpec& prior,
                                        const Dataset& data, const McmcConfig& cfg,
                                        const Eigen::VectorXd& start,
                                        const Eigen::MatrixXd& proposal_chol, int chain) {
  const int p = data.p();
  Rng rng(derive_seed(cfg.seed, 0x3E7A0ULL, chain));
  const int keep = cfg.retained_per_chain();
  ChainOutput out;
  out.beta.resize(keep, p);

  Eigen::VectorXd beta = start;
  double lt = reduced_log_target(model, prior, data, beta);
  double log_scale = 0.0;
  int window_accepts = 0, window_count = 0;
  long long post_accepts = 0, post_count = 0;
  Eigen::VectorXd z(p), proposal(p);
  int stored = 0;
  for (int iter = 0; iter < cfg.n_iter && stored < keep; ++iter) {
    for (int j = 0; j < p; ++j) z(j) = rng.normal();
    proposal = beta + std::exp(log_scale) * (proposal_chol * z);
    const double lt_prop = reduced_log_target(model, prior, data, proposal);
    const bool accept = std::log(rng.uniform_pos()) < lt_prop - lt;
    if (accept) {
      beta = proposal;
      lt = lt_prop;
    }

    if (iter < cfg.n_burnin) {
      // Scale-only adaptation toward the target acceptance rate, frozen afterward.
      window_accepts += accept ? 1 : 0;
      if (++window_count == cfg.adapt_window) {
        const double rate = static_cast<double>(window_accepts) / cfg.adapt_window;
        log_scale = std::clamp(log_scale + (rate - cfg.target_accept), -10.0, 10.0);
        window_accepts = 0;
        window_count = 0;
      }
    } else {
      post_accepts += accept ? 1 : 0;
      ++post_count;
      if ((iter - cfg.n_burnin) % cfg.thin == 0) out.beta.row(stored++) = beta.transpose();
    }
  }
  if (post_count > 0) out.acceptance = static_cast<double>(post_accepts) / post_count;
  return out;
}

}  // namespace detail

// Draw from the posterior. Normal-mean uses the exact conjugate posterior, the linear
// family a two-block Gibbs sampler, and the remaining families adaptive random-walk
// Metropolis started at the MLE with the inverse-information proposal shape.
inline PosteriorSample sample_posterior(const ModelSpec& model, const PriorSpec& prior,
                                        const Dataset& data, const McmcConfig& cfg) {
  validate_model_data(model, data);
  prior.validate(data.p());
  cfg.validate();
  detail::require_estimable(data);

  const int p = data.p();
  const int keep = cfg.retained_per_chain();
  const int total = keep * cfg.n_chains;

  std::vector<detail::ChainOutput> chains;
  chains.reserve(cfg.n_chains);
  switch (model.family) {
    case Family::normal_mean:
      for (int c = 0; c < cfg.n_chains; ++c)
        chains.push_back(detail::run_conjugate_normal_mean_chain(model, prior, data, cfg, c));
      break;
    case Family::linear: {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X());
      const double rss = (data.y() - data.X() * qr.solve(data.y())).squaredNorm();
      const double s2_init = std::max(rss / data.n(), 1e-8);
      for (int c = 0; c < cfg.n_chains; ++c)
        chains.push_back(detail::run_linear_gibbs_chain(prior, data, cfg, s2_init, c));
      break;
    }
    case Family::poisson:
    case Family::exponential_ph: {
      const FreqFit mle = fit_mle(model, data);
      const Eigen::MatrixXd scaled_info =
          empirical_fisher(model, mle.param(), data) * data.n();
      Eigen::LLT<Eigen::MatrixXd> info_llt(scaled_info);
      if (info_llt.info() != Eigen::Success)
        throw numeric_error("information matrix at the MLE is not positive definite");
      Eigen::MatrixXd prop_cov =
          info_llt.solve(Eigen::MatrixXd::Identity(p, p)) * (2.38 * 2.38 / p);
      prop_cov = 0.5 * (prop_cov + prop_cov.transpose()).eval();
      Eigen::LLT<Eigen::MatrixXd> prop_llt(prop_cov);
      if (prop_llt.info() != Eigen::Success)
        throw numeric_error("proposal covariance is not positive definite");
      const Eigen::MatrixXd prop_chol = prop_llt.matrixL();
      for (int c = 0; c < cfg.n_chains; ++c)
        chains.push_back(detail::run_metropolis_chain(model, prior, data, cfg,
                                                      mle.theta_mle, prop_chol, c));
      break;
    }
  }

  PosteriorSample sample;
  sample.n_chains = cfg.n_chains;
  sample.retained_per_chain = keep;
  sample.thin = cfg.thin;
  sample.n_burnin = cfg.n_burnin;
  sample.draws.resize(total, p);
  sample.chain_ids.resize(total);
  if (has_sigma2(model.family)) sample.sigma2_draws = Eigen::VectorXd(total);
  double acc_sum = 0.0;
  int acc_count = 0;
  for (int c = 0; c < cfg.n_chains; ++c) {
    sample.draws.middleRows(c * keep, keep) = chains[c].beta;
    std::fill_n(sample.chain_ids.begin() + c * keep, keep, c);
    if (sample.sigma2_draws) sample.sigma2_draws->segment(c * keep, keep) = chains[c].sigma2;
    if (!std::isnan(chains[c].acceptance)) {
      acc_sum += chains[c].acceptance;
      ++acc_count;
    }
  }

  // Diagnostics over beta columns plus sigma2 when present.
  const int n_params = p + (sample.sigma2_draws ? 1 : 0);
  ChainDiagnostics& diag = sample.diagnostics;
  diag.parameter_names.resize(n_params);
  diag.rhat.resize(n_params);
  diag.ess.resize(n_params);
  for (int j = 0; j < n_params; ++j) {
    const bool is_s2 = j == p;
    diag.parameter_names[j] = is_s2 ? "sigma2" : "beta" + std::to_string(j);
    const Eigen::VectorXd col = is_s2 ? *sample.sigma2_draws : sample.draws.col(j);
    diag.rhat(j) = split_rhat(col, cfg.n_chains);
    diag.ess(j) = effective_sample_size(col, cfg.n_chains);
    if (diag.rhat(j) > 1.1)
      diag.warnings.push_back("R-hat above 1.1 for " + diag.parameter_names[j]);
  }
  if (acc_count > 0) diag.acceptance_rate = acc_sum / acc_count;
  if (keep < 500)
    diag.warnings.push_back("fewer than 500 retained draws per chain; estimates may be noisy");
  return sample;
}

// One row per retained draw: chain, iteration, coefficients, sigma2 when present.
inline void write_draws_csv(const PosteriorSample& sample, std::ostream& os) {
  os << "chain,iter";
  for (int j = 0; j < sample.dim(); ++j) os << ",beta" << j;
  if (sample.sigma2_draws) os << ",sigma2";
  os << "\n";
  os.precision(17);
  for (int i = 0; i < sample.size(); ++i) {
    const int within = i % sample.retained_per_chain;
    os << sample.chain_ids[i] << "," << (sample.n_burnin + 1 + within * sample.thin);
    for (int j = 0; j < sample.dim(); ++j) os << "," << sample.draws(i, j);
    if (sample.sigma2_draws) os << "," << (*sample.sigma2_draws)(i);
    os << "\n";
  }
}

}  // namespace brse

#endif  // BRSE_POSTERIOR_HPP
