#ifndef BRSE_TYPES_HPP
#define BRSE_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace brse {

// Unusable input data: missing files, bad columns, malformed cells, empty samples.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: overflow, singular or ill-conditioned systems, non-convergence.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Family {
  normal_mean,     // mean of a normal sample, outcome variance held fixed (possibly wrongly)
  linear,          // normal linear regression, residual variance a sampled nuisance
  poisson,         // Poisson regression, log link, dispersion fixed at 1
  exponential_ph,  // exponential proportional hazards, rate exp(x'beta), dispersion fixed at 1
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::normal_mean: return "normal-mean";
    case Family::linear: return "linear";
    case Family::poisson: return "poisson";
    case Family::exponential_ph: return "exponential-ph";
  }
  return "?";
}

inline bool is_survival(Family f) { return f == Family::exponential_ph; }

// Families whose variance function supports the quasi-likelihood scalar correction.
inline bool is_glm(Family f) { return f == Family::linear || f == Family::poisson; }

// Whether the residual variance is a sampled nuisance parameter.
inline bool has_sigma2(Family f) { return f == Family::linear; }

struct ModelSpec {
  Family family = Family::linear;
  // normal_mean only: the fixed outcome variance the analysis assumes.
  double assumed_variance = 1.0;

  static ModelSpec normal_mean(double assumed_variance = 1.0) {
    if (!(assumed_variance > 0.0) || !std::isfinite(assumed_variance))
      throw std::invalid_argument("assumed_variance must be positive and finite");
    return ModelSpec{Family::normal_mean, assumed_variance};
  }
  static ModelSpec linear() { return ModelSpec{Family::linear, 1.0}; }
  static ModelSpec poisson() { return ModelSpec{Family::poisson, 1.0}; }
  static ModelSpec exponential_ph() { return ModelSpec{Family::exponential_ph, 1.0}; }
};

struct Observation {
  double y = 0.0;                // outcome; for survival data equals the observed time
  Eigen::VectorXd x;             // covariate row, first entry 1.0 when an intercept is modeled
  std::optional<bool> event;     // survival only
  std::optional<double> time;    // survival only, >= 0
};

// One sample of n observations sharing a common covariate dimension p.
// Survival fields (times, events) are present for all rows or none.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd y) : X_(std::move(X)), y_(std::move(y)) {
    check_core();
  }

  Dataset(Eigen::MatrixXd X, Eigen::VectorXd times, Eigen::ArrayXd events)
      : X_(std::move(X)), y_(times), times_(std::move(times)), events_(std::move(events)) {
    check_core();
    if (times_->size() != X_.rows() || events_->size() != X_.rows())
      throw std::invalid_argument("survival fields must match the number of rows");
    if ((times_->array() < 0.0).any())
      throw std::invalid_argument("survival times must be nonnegative");
    if (!times_->allFinite()) throw std::invalid_argument("non-finite survival time");
    for (Eigen::Index i = 0; i < events_->size(); ++i) {
      double e = (*events_)(i);
      if (e != 0.0 && e != 1.0) throw std::invalid_argument("event indicators must be 0 or 1");
    }
  }

  static Dataset from_observations(const std::vector<Observation>& obs) {
    if (obs.empty()) throw std::invalid_argument("dataset requires at least one observation");
    const auto n = static_cast<Eigen::Index>(obs.size());
    const Eigen::Index p = obs.front().x.size();
    const bool survival = obs.front().time.has_value();
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n), times(n);
    Eigen::ArrayXd events(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Observation& o = obs[static_cast<std::size_t>(i)];
      if (o.x.size() != p) throw std::invalid_argument("observations disagree on covariate dimension");
      if (o.time.has_value() != survival || o.event.has_value() != survival)
        throw std::invalid_argument("survival fields must be present for all observations or none");
      X.row(i) = o.x.transpose();
      y(i) = o.y;
      if (survival) {
        times(i) = *o.time;
        events(i) = *o.event ? 1.0 : 0.0;
      }
    }
    if (survival) return Dataset(std::move(X), std::move(times), std::move(events));
    return Dataset(std::move(X), std::move(y));
  }

  int n() const { return static_cast<int>(X_.rows()); }
  int p() const { return static_cast<int>(X_.cols()); }

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }

  bool has_survival_fields() const { return times_.has_value(); }
  const Eigen::VectorXd& times() const {
    if (!times_) throw std::invalid_argument("dataset carries no survival times");
    return *times_;
  }
  const Eigen::ArrayXd& events() const {
    if (!events_) throw std::invalid_argument("dataset carries no event indicators");
    return *events_;
  }

  Observation row(int i) const {
    if (i < 0 || i >= n()) throw std::out_of_range("observation index");
    Observation o;
    o.y = y_(i);
    o.x = X_.row(i).transpose();
    if (times_) {
      o.time = (*times_)(i);
      o.event = (*events_)(i) != 0.0;
    }
    return o;
  }

 private:
  void check_core() const {
    if (X_.rows() < 1) throw std::invalid_argument("dataset requires at least one observation");
    if (X_.cols() < 1) throw std::invalid_argument("dataset requires at least one covariate column");
    if (y_.size() != X_.rows()) throw std::invalid_argument("outcome length must match design rows");
    if (!X_.allFinite() || !y_.allFinite()) throw std::invalid_argument("non-finite value in dataset");
  }

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  std::optional<Eigen::VectorXd> times_;
  std::optional<Eigen::ArrayXd> events_;
};

struct ParamPoint {
  Eigen::VectorXd beta;
  std::optional<double> sigma2;  // linear family only

  static ParamPoint of(Eigen::VectorXd beta) { return ParamPoint{std::move(beta), std::nullopt}; }
  static ParamPoint of(Eigen::VectorXd beta, double sigma2) {
    return ParamPoint{std::move(beta), sigma2};
  }
  static ParamPoint scalar(double theta) {
    Eigen::VectorXd b(1);
    b << theta;
    return ParamPoint{std::move(b), std::nullopt};
  }
};

inline void validate_param(const ModelSpec& model, const ParamPoint& theta, int p) {
  if (theta.beta.size() != p) throw std::invalid_argument("parameter dimension mismatch");
  if (!theta.beta.allFinite()) throw std::domain_error("NaN or infinite parameter value");
  if (has_sigma2(model.family)) {
    if (!theta.sigma2) throw std::invalid_argument("linear family requires sigma2");
    if (std::isnan(*theta.sigma2)) throw std::domain_error("NaN sigma2");
    if (!(*theta.sigma2 > 0.0)) throw std::domain_error("sigma2 must be positive");
  } else if (theta.sigma2) {
    throw std::invalid_argument("sigma2 is only meaningful for the linear family");
  }
}

// Family/dataset compatibility; the normal-mean family works on a unit design column.
inline void validate_model_data(const ModelSpec& model, const Dataset& data) {
  if (is_survival(model.family) != data.has_survival_fields())
    throw std::invalid_argument(is_survival(model.family)
                                    ? "survival family requires event and time fields"
                                    : "event/time fields supplied to a non-survival family");
  if (model.family == Family::normal_mean) {
    if (data.p() != 1 || (data.X().array() != 1.0).any())
      throw std::invalid_argument("normal-mean family requires p = 1 with unit covariate");
  }
}

}  // namespace brse

#endif  // BRSE_TYPES_HPP
