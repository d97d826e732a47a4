#ifndef BRSE_LOSS_HPP
#define BRSE_LOSS_HPP

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>

#include "brse/model.hpp"
#include "brse/types.hpp"

namespace brse {

struct LossValue {
  double total = 0.0;
  double logdet_term = 0.0;
  double estimation_term = 0.0;
  double lack_of_fit_term = 0.0;
};

namespace detail {

// log det of a matrix required to have positive determinant (PD matrices qualify, as
// do products of PD matrices, which need not be symmetric).
inline double log_det_positive(const Eigen::MatrixXd& a, const char* what) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rcond() < 1e-12) throw numeric_error(std::string(what) + " is singular or ill-conditioned");
  double logdet = 0.0;
  double sign = lu.permutationP().determinant();
  const auto& diag = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double d = diag(i);
    if (d == 0.0) throw numeric_error(std::string(what) + " is singular");
    if (d < 0.0) {
      sign = -sign;
      logdet += std::log(-d);
    } else {
      logdet += std::log(d);
    }
  }
  if (sign <= 0.0) throw numeric_error(std::string(what) + " has nonpositive determinant");
  return logdet;
}

// Score rows l_i'(theta)^T stacked into an n x p matrix.
inline Eigen::MatrixXd score_rows(const ModelSpec& model, const ParamPoint& theta,
                                  const Dataset& data) {
  const Kernel k = kernel(model, theta, data);
  const Eigen::ArrayXd r = (k.response - k.fitted).array() / k.alpha;
  return data.X().array().colwise() * r;
}

}  // namespace detail

// log|Sigma| + (theta - d)' Sigma^-1 (theta - d), for symmetric positive definite Sigma.
inline LossValue inference_loss(const Eigen::VectorXd& theta, const Eigen::VectorXd& d,
                                const Eigen::MatrixXd& sigma) {
  if (theta.size() != d.size() || sigma.rows() != theta.size() || sigma.cols() != theta.size())
    throw std::invalid_argument("inference loss dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw numeric_error("Sigma must be positive definite (Cholesky failed)");
  LossValue v;
  v.logdet_term = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::VectorXd diff = theta - d;
  v.estimation_term = diff.dot(llt.solve(diff));
  v.lack_of_fit_term = 0.0;
  v.total = v.logdet_term + v.estimation_term;
  return v;
}

inline LossValue inference_loss(const ParamPoint& theta, const Eigen::VectorXd& d,
                                const Eigen::MatrixXd& sigma) {
  return inference_loss(theta.beta, d, sigma);
}

// log|Sigma| + (theta-d)' Omega Sigma^-1 (theta-d)
//            + (1/n) sum_i l_i'(theta)' {Omega I_n(theta)}^-1 l_i'(theta).
// Sigma and Omega must be invertible with positive determinant; the lack-of-fit term is
// computed with a single factorization of Omega I_n(theta) solved against every score.
inline LossValue balanced_inference_loss(const ModelSpec& model, const ParamPoint& theta,
                                         const Eigen::VectorXd& d, const Eigen::MatrixXd& sigma,
                                         const Eigen::MatrixXd& omega, const Dataset& data) {
  const int p = data.p();
  if (d.size() != p || sigma.rows() != p || sigma.cols() != p || omega.rows() != p ||
      omega.cols() != p)
    throw std::invalid_argument("balanced loss dimension mismatch");
  LossValue v;
  v.logdet_term = detail::log_det_positive(sigma, "Sigma");

  Eigen::PartialPivLU<Eigen::MatrixXd> sigma_lu(sigma);
  const Eigen::VectorXd diff = theta.beta - d;
  v.estimation_term = diff.dot(omega * sigma_lu.solve(diff));

  const Eigen::MatrixXd scores = detail::score_rows(model, theta, data);
  const Eigen::MatrixXd weighted = omega * empirical_fisher(model, theta, data);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(weighted);
  if (lu.rcond() < 1e-12) throw numeric_error("Omega I_n(theta) is singular or ill-conditioned");
  const Eigen::MatrixXd solved = lu.solve(scores.transpose());  // p x n
  v.lack_of_fit_term = (scores.array() * solved.transpose().array()).sum() / data.n();

  v.total = v.logdet_term + v.estimation_term + v.lack_of_fit_term;
  return v;
}

// Canonical-link form of the balanced loss: the lack-of-fit term becomes a sum of
// squared Pearson-type residuals weighted by a modified leverage,
//   sum_i (r_i^2 / alpha) x_i' {Omega sum_j V_j x_j x_j'}^-1 x_i.
// Algebraically identical to balanced_inference_loss for these families; kept as an
// independent evaluation route.
inline LossValue balanced_inference_loss_canonical(const ModelSpec& model,
                                                   const ParamPoint& theta,
                                                   const Eigen::VectorXd& d,
                                                   const Eigen::MatrixXd& sigma,
                                                   const Eigen::MatrixXd& omega,
                                                   const Dataset& data) {
  const int p = data.p();
  if (d.size() != p || sigma.rows() != p || sigma.cols() != p || omega.rows() != p ||
      omega.cols() != p)
    throw std::invalid_argument("balanced loss dimension mismatch");
  LossValue v;
  v.logdet_term = detail::log_det_positive(sigma, "Sigma");

  Eigen::PartialPivLU<Eigen::MatrixXd> sigma_lu(sigma);
  const Eigen::VectorXd diff = theta.beta - d;
  v.estimation_term = diff.dot(omega * sigma_lu.solve(diff));

  const detail::Kernel k = detail::kernel(model, theta, data);
  const Eigen::MatrixXd gram =
      data.X().transpose() * (k.vweight.asDiagonal() * data.X());  // sum_j V_j x_j x_j'
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd(omega * gram));
  if (lu.rcond() < 1e-12) throw numeric_error("weighted Gram matrix is singular");
  const Eigen::MatrixXd solved = lu.solve(data.X().transpose());  // p x n
  const Eigen::ArrayXd leverage = (data.X().array() * solved.transpose().array()).rowwise().sum();
  const Eigen::ArrayXd r = (k.response - k.fitted).array();
  v.lack_of_fit_term = (r * r / k.alpha * leverage).sum();

  v.total = v.logdet_term + v.estimation_term + v.lack_of_fit_term;
  return v;
}

}  // namespace brse

#endif  // BRSE_LOSS_HPP
