#ifndef BRSE_DIAGNOSTICS_HPP
#define BRSE_DIAGNOSTICS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace brse {

namespace detail {

// Mean and variance (denominator m-1) of a column segment.
inline std::pair<double, double> segment_moments(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  double var = 0.0;
  if (v.size() > 1) var = (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
  return {mean, var};
}

}  // namespace detail

// Split-chain potential scale reduction for one parameter. `column` holds the retained
// draws, chain-major, with `n_chains` equal blocks; each block is split in half.
inline double split_rhat(const Eigen::VectorXd& column, int n_chains) {
  const int per_chain = static_cast<int>(column.size()) / n_chains;
  const int half = per_chain / 2;
  if (half < 2) return std::numeric_limits<double>::quiet_NaN();
  const int m = 2 * n_chains;
  std::vector<double> means(m), vars(m);
  for (int c = 0; c < n_chains; ++c) {
    for (int s = 0; s < 2; ++s) {
      const Eigen::VectorXd seg = column.segment(c * per_chain + s * half, half);
      const auto [mu, var] = detail::segment_moments(seg);
      means[2 * c + s] = mu;
      vars[2 * c + s] = var;
    }
  }
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(half) / (m - 1);
  double w = 0.0;
  for (double var : vars) w += var;
  w /= m;
  if (w <= 0.0) return 1.0;  // degenerate chains
  const double var_plus = (half - 1.0) / half * w + b / half;
  return std::sqrt(var_plus / w);
}

// Effective sample size via the initial-positive-sequence truncation of the pooled
// autocovariance (pairwise sums kept while positive).
inline double effective_sample_size(const Eigen::VectorXd& column, int n_chains) {
  const int per_chain = static_cast<int>(column.size()) / n_chains;
  if (per_chain < 4) return std::numeric_limits<double>::quiet_NaN();
  const int max_lag = per_chain - 1;

  std::vector<double> chain_mean(n_chains), chain_var(n_chains);
  Eigen::MatrixXd centered(per_chain, n_chains);
  for (int c = 0; c < n_chains; ++c) {
    const Eigen::VectorXd seg = column.segment(c * per_chain, per_chain);
    const auto [mu, var] = detail::segment_moments(seg);
    chain_mean[c] = mu;
    chain_var[c] = var;
    centered.col(c) = seg.array() - mu;
  }
  double w = 0.0;
  for (double var : chain_var) w += var;
  w /= n_chains;
  double b_over_n = 0.0;
  if (n_chains > 1) {
    double grand = 0.0;
    for (double mu : chain_mean) grand += mu;
    grand /= n_chains;
    for (double mu : chain_mean) b_over_n += (mu - grand) * (mu - grand);
    b_over_n /= (n_chains - 1);
  }
  const double var_plus = (per_chain - 1.0) / per_chain * w + b_over_n;
  if (var_plus <= 0.0) return std::numeric_limits<double>::quiet_NaN();

  auto rho = [&](int t) {
    double acov = 0.0;
    for (int c = 0; c < n_chains; ++c)
      acov += centered.col(c).head(per_chain - t).dot(centered.col(c).tail(per_chain - t));
    acov /= static_cast<double>(n_chains) * (per_chain - t);
    return 1.0 - (w - acov) / var_plus;
  };

  double tau = rho(0);  // = 1 up to the between-chain correction
  for (int t = 1; t + 1 < max_lag; t += 2) {
    const double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  const double total = static_cast<double>(column.size());
  return total / std::max(tau, 1.0 / total);
}

struct ChainDiagnostics {
  std::vector<std::string> parameter_names;
  Eigen::VectorXd rhat;
  Eigen::VectorXd ess;
  std::vector<std::string> warnings;
  double acceptance_rate = std::numeric_limits<double>::quiet_NaN();  // Metropolis only
};

}  // namespace brse

#endif  // BRSE_DIAGNOSTICS_HPP
