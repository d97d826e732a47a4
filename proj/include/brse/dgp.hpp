#ifndef BRSE_DGP_HPP
#define BRSE_DGP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "brse/freq.hpp"
#include "brse/prior.hpp"
#include "brse/rng.hpp"
#include "brse/types.hpp"

namespace brse {

// Data-generating processes for the simulation studies. The regression designs use a
// single covariate with an intercept; `a` bends the conditional mean quadratically so
// the straight-line working model is misspecified whenever a != 0.
struct DgpSpec {
  enum class Kind {
    linear_quadratic,        // U ~ U(0,3),  Y | U ~ N(U + aU^2, 1)
    poisson_quadratic,       // U ~ U(-3,3), Y | U ~ Poisson(exp(U + aU^2))
    weibull_ph,              // U ~ U(0,3),  T | U ~ Weibull(kappa, exp(b1 + b2 U)), censored
    fixed_design_linear,     // U evenly spaced on [0,3], Y as linear_quadratic
  };

  Kind kind = Kind::linear_quadratic;
  int n = 100;
  double a = 0.0;
  double kappa = 1.0;
  double beta1 = 0.0;
  double beta2 = -0.5;
  double censor_time = 10.0;

  static DgpSpec linear_quadratic(int n, double a) {
    return DgpSpec{Kind::linear_quadratic, n, a};
  }
  static DgpSpec poisson_quadratic(int n, double a) {
    return DgpSpec{Kind::poisson_quadratic, n, a};
  }
  static DgpSpec weibull_ph(int n, double kappa, double beta2, double beta1 = 0.0,
                            double censor_time = 10.0) {
    DgpSpec d;
    d.kind = Kind::weibull_ph;
    d.n = n;
    d.kappa = kappa;
    d.beta1 = beta1;
    d.beta2 = beta2;
    d.censor_time = censor_time;
    return d;
  }
  static DgpSpec fixed_design_linear(int n, double a) {
    return DgpSpec{Kind::fixed_design_linear, n, a};
  }

  bool is_survival() const { return kind == Kind::weibull_ph; }
  bool is_fixed_design() const { return kind == Kind::fixed_design_linear; }

  void validate() const {
    if (n < 3) throw std::invalid_argument("scenario sample size must be at least p + 1");
    if (kind == Kind::weibull_ph) {
      if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
      if (!(censor_time > 0.0)) throw std::invalid_argument("censor time must be positive");
    }
    if (kind == Kind::fixed_design_linear && n < 2)
      throw std::invalid_argument("fixed design requires n >= 2");
  }

  std::string label() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::linear_quadratic: os << "linear a=" << a; break;
      case Kind::poisson_quadratic: os << "poisson a=" << a; break;
      case Kind::weibull_ph:
        os << "weibull-ph kappa=" << kappa << " beta=" << beta2;
        break;
      case Kind::fixed_design_linear: os << "fixed-linear a=" << a; break;
    }
    os << " n=" << n;
    return os.str();
  }

  // Identifier for the limiting target; sample size only matters for fixed designs.
  std::string limit_key() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::linear_quadratic: os << "linear a=" << a; break;
      case Kind::poisson_quadratic: os << "poisson a=" << a; break;
      case Kind::weibull_ph:
        os << "weibull-ph kappa=" << kappa << " beta=" << beta2 << " c=" << censor_time;
        break;
      case Kind::fixed_design_linear: os << "fixed-linear a=" << a << " n=" << n; break;
    }
    return os.str();
  }
};

// Working model and priors conventionally paired with each process.
inline ModelSpec model_for(const DgpSpec& dgp) {
  switch (dgp.kind) {
    case DgpSpec::Kind::linear_quadratic:
    case DgpSpec::Kind::fixed_design_linear: return ModelSpec::linear();
    case DgpSpec::Kind::poisson_quadratic: return ModelSpec::poisson();
    case DgpSpec::Kind::weibull_ph: return ModelSpec::exponential_ph();
  }
  return ModelSpec::linear();
}

inline PriorSpec prior_for(const DgpSpec& dgp) {
  PriorSpec prior = PriorSpec::defaults(2);  // N(0, 1e3) per coefficient
  if (model_for(dgp).family == Family::linear) prior.gamma_precision(0.1, 0.1);
  return prior;
}

inline Dataset generate(const DgpSpec& dgp, std::uint64_t seed) {
  dgp.validate();
  Rng rng(derive_seed(seed, 0xD67AULL));
  const int n = dgp.n;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  switch (dgp.kind) {
    case DgpSpec::Kind::linear_quadratic:
    case DgpSpec::Kind::fixed_design_linear: {
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        const double u = dgp.is_fixed_design() ? 3.0 * i / (n - 1.0) : 3.0 * rng.uniform();
        X(i, 1) = u;
        y(i) = u + dgp.a * u * u + rng.normal();
      }
      return Dataset(std::move(X), std::move(y));
    }
    case DgpSpec::Kind::poisson_quadratic: {
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        const double u = -3.0 + 6.0 * rng.uniform();
        X(i, 1) = u;
        y(i) = static_cast<double>(rng.poisson(std::exp(u + dgp.a * u * u)));
      }
      return Dataset(std::move(X), std::move(y));
    }
    case DgpSpec::Kind::weibull_ph: {
      Eigen::VectorXd times(n);
      Eigen::ArrayXd events(n);
      for (int i = 0; i < n; ++i) {
        const double u = 3.0 * rng.uniform();
        X(i, 1) = u;
        const double rate = std::exp(dgp.beta1 + dgp.beta2 * u);
        const double t = std::pow(-std::log(rng.uniform_pos()) / rate, 1.0 / dgp.kappa);
        times(i) = std::min(t, dgp.censor_time);
        events(i) = t <= dgp.censor_time ? 1.0 : 0.0;
      }
      return Dataset(std::move(X), std::move(times), std::move(events));
    }
  }
  throw std::logic_error("unreachable");
}

struct KlPoint {
  Eigen::VectorXd theta_star;
  Eigen::VectorXd mcse;  // zero where the projection is available in closed form
};

namespace detail {

// Large-N maximum likelihood on a synthetic population: the Monte Carlo route to the
// limiting point of the misspecified fits. The population is held in flat arrays and
// the Newton steps are evaluated vectorized over (1, u) designs.
inline KlPoint kl_oracle(const DgpSpec& dgp, std::int64_t big_n, std::uint64_t seed) {
  Eigen::ArrayXd u(big_n), resp(big_n), aux(big_n);
  Rng rng(seed);
  const bool survival = dgp.is_survival();
  for (std::int64_t i = 0; i < big_n; ++i) {
    if (dgp.kind == DgpSpec::Kind::poisson_quadratic) {
      const double ui = -3.0 + 6.0 * rng.uniform();
      u(i) = ui;
      resp(i) = static_cast<double>(rng.poisson(std::exp(ui + dgp.a * ui * ui)));
    } else if (survival) {
      const double ui = 3.0 * rng.uniform();
      u(i) = ui;
      const double rate = std::exp(dgp.beta1 + dgp.beta2 * ui);
      const double t = std::pow(-std::log(rng.uniform_pos()) / rate, 1.0 / dgp.kappa);
      aux(i) = std::min(t, dgp.censor_time);           // observed time
      resp(i) = t <= dgp.censor_time ? 1.0 : 0.0;      // event indicator
    } else {
      throw std::invalid_argument("Monte Carlo oracle applies to the poisson and hazards processes");
    }
  }

  // Newton on the totals; the likelihoods are concave, so step-halving on the
  // objective gives global convergence.
  double b0, b1 = 0.0;
  if (survival) {
    b0 = std::log(resp.sum() / aux.sum());
  } else {
    b0 = std::log(std::max(resp.mean(), 1e-12));
  }
  auto objective = [&](double c0, double c1, Eigen::ArrayXd& eta, Eigen::ArrayXd& e) {
    eta = c0 + c1 * u;
    if ((eta.abs() > kMaxLinearPredictor).any())
      return -std::numeric_limits<double>::infinity();
    e = eta.exp();
    if (survival) return (resp * eta - aux * e).sum();
    return (resp * eta - e).sum();
  };
  Eigen::ArrayXd eta(big_n), e(big_n);
  double ll = objective(b0, b1, eta, e);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const Eigen::ArrayXd v = survival ? (aux * e).eval() : e;
    const Eigen::ArrayXd r = resp - v;
    const double g0 = r.sum(), g1 = (u * r).sum();
    if (std::max(std::fabs(g0), std::fabs(g1)) / big_n < 1e-10) {
      converged = true;
      break;
    }
    const double h00 = v.sum(), h01 = (u * v).sum(), h11 = (u * u * v).sum();
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 0.0)) throw numeric_error("singular information in the Monte Carlo oracle");
    const double s0 = (h11 * g0 - h01 * g1) / det;
    const double s1 = (-h01 * g0 + h00 * g1) / det;
    const double slack = 1e-11 * (1.0 + std::fabs(ll));
    double scale = 1.0;
    for (int h = 0; h < 40; ++h) {
      const double c0 = b0 + scale * s0, c1 = b1 + scale * s1;
      const double cand = objective(c0, c1, eta, e);
      if (cand > ll - slack) {
        b0 = c0;
        b1 = c1;
        ll = cand;
        break;
      }
      scale *= 0.5;
    }
  }
  if (!converged) throw numeric_error("Monte Carlo oracle did not converge");

  // robust standard error of the oracle fit = Monte Carlo error of theta*
  const Eigen::ArrayXd v = survival ? (aux * e).eval() : e;
  const Eigen::ArrayXd r = resp - v;
  const double h00 = v.sum(), h01 = (u * v).sum(), h11 = (u * u * v).sum();
  const double m00 = (r * r).sum(), m01 = (u * r * r).sum(), m11 = (u * u * r * r).sum();
  Eigen::Matrix2d bread, meat;
  bread << h00, h01, h01, h11;
  meat << m00, m01, m01, m11;
  const Eigen::Matrix2d cov = bread.inverse() * meat * bread.inverse();

  KlPoint out;
  out.theta_star.resize(2);
  out.theta_star << b0, b1;
  out.mcse = cov.diagonal().array().sqrt();
  return out;
}

}  // namespace detail

// The limiting target of the misspecified fit: the population least-squares projection
// in closed form for the linear designs, a large-N maximum-likelihood oracle otherwise
// (with its Monte Carlo standard error reported).
inline KlPoint kl_point(const DgpSpec& dgp, const ModelSpec& model,
                        std::int64_t oracle_n = 0) {
  dgp.validate();
  if (model_for(dgp).family != model.family)
    throw std::invalid_argument("model family does not match the data-generating process");
  KlPoint out;
  switch (dgp.kind) {
    case DgpSpec::Kind::linear_quadratic: {
      // Moments of U(0,3): projection of u + a u^2 onto (1, u).
      out.theta_star.resize(2);
      out.theta_star << -1.5 * dgp.a, 1.0 + 3.0 * dgp.a;
      out.mcse = Eigen::VectorXd::Zero(2);
      return out;
    }
    case DgpSpec::Kind::fixed_design_linear: {
      Eigen::MatrixXd X(dgp.n, 2);
      Eigen::VectorXd m(dgp.n);
      for (int i = 0; i < dgp.n; ++i) {
        const double u = 3.0 * i / (dgp.n - 1.0);
        X(i, 0) = 1.0;
        X(i, 1) = u;
        m(i) = u + dgp.a * u * u;
      }
      out.theta_star = (X.transpose() * X).ldlt().solve(X.transpose() * m);
      out.mcse = Eigen::VectorXd::Zero(2);
      return out;
    }
    case DgpSpec::Kind::poisson_quadratic: {
      const std::int64_t big_n = oracle_n > 0 ? oracle_n : 10'000'000;
      return detail::kl_oracle(dgp, big_n, hash_string(0x6B1ULL, dgp.limit_key()));
    }
    case DgpSpec::Kind::weibull_ph: {
      const std::int64_t big_n = oracle_n > 0 ? oracle_n : 1'000'000;
      return detail::kl_oracle(dgp, big_n, hash_string(0x6B1ULL, dgp.limit_key()));
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace brse

#endif  // BRSE_DGP_HPP
