#ifndef BRSE_REPORT_HPP
#define BRSE_REPORT_HPP

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "brse/brse.hpp"
#include "brse/diagnostics.hpp"
#include "brse/freq.hpp"

namespace brse {

// Side-by-side frequentist / Bayesian fit summary: the six numeric columns are
// Est., SE, Robust SE (frequentist) and Est., Post. SD, BRSE (Bayesian).
struct FitReport {
  std::string model;
  int n = 0;
  std::vector<std::string> coef;
  Eigen::VectorXd freq_est, freq_se, freq_robust_se;
  Eigen::VectorXd bayes_est, post_sd, brse;
  double level = 0.95;
  std::vector<CoefficientIntervals> intervals;
  ChainDiagnostics diagnostics;
  std::vector<std::string> warnings;
};

inline FitReport make_fit_report(const std::string& model_name,
                                 const std::vector<std::string>& coef_names,
                                 const Dataset& data, const FreqFit& fit,
                                 const BrseResult& result, const PosteriorSample& sample) {
  FitReport report;
  report.model = model_name;
  report.n = data.n();
  report.coef = coef_names;
  report.freq_est = fit.theta_mle;
  report.freq_se = fit.model_se;
  report.freq_robust_se = fit.robust_se;
  report.bayes_est = result.d_hat;
  report.post_sd = result.post_sd;
  report.brse = result.brse;
  report.level = result.level;
  report.intervals = result.intervals;
  report.diagnostics = sample.diagnostics;
  report.warnings = sample.diagnostics.warnings;
  for (int j : result.nonpositive_diag)
    report.warnings.push_back("nonpositive robust variance diagonal for " +
                              coef_names[static_cast<std::size_t>(j)]);
  return report;
}

namespace detail {

inline std::string fmt3(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

}  // namespace detail

inline std::string render_fit_csv(const FitReport& r, bool intervals = false) {
  std::ostringstream os;
  os << "coefficient,est,se,robust_se,bayes_est,post_sd,brse";
  if (intervals) os << ",credible_lo,credible_hi,robust_lo,robust_hi";
  os << "\n";
  for (std::size_t j = 0; j < r.coef.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    os << r.coef[j] << ',' << detail::fmt3(r.freq_est(i)) << ',' << detail::fmt3(r.freq_se(i))
       << ',' << detail::fmt3(r.freq_robust_se(i)) << ',' << detail::fmt3(r.bayes_est(i))
       << ',' << detail::fmt3(r.post_sd(i)) << ',' << detail::fmt3(r.brse(i));
    if (intervals) {
      const auto& iv = r.intervals[j];
      os << ',' << detail::fmt3(iv.credible.lo) << ',' << detail::fmt3(iv.credible.hi) << ','
         << detail::fmt3(iv.robust.lo) << ',' << detail::fmt3(iv.robust.hi);
    }
    os << '\n';
  }
  return os.str();
}

inline std::string render_fit_markdown(const FitReport& r, bool intervals = false) {
  std::ostringstream os;
  os << "model: " << r.model << ", n = " << r.n << "\n\n";
  os << "| coefficient | Est. | SE | Robust SE | Est. | Post. SD | BRSE |";
  if (intervals) os << " credible | robust |";
  os << "\n|---|---:|---:|---:|---:|---:|---:|";
  if (intervals) os << "---|---|";
  os << "\n";
  for (std::size_t j = 0; j < r.coef.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    os << "| " << r.coef[j] << " | " << detail::fmt3(r.freq_est(i)) << " | "
       << detail::fmt3(r.freq_se(i)) << " | " << detail::fmt3(r.freq_robust_se(i)) << " | "
       << detail::fmt3(r.bayes_est(i)) << " | " << detail::fmt3(r.post_sd(i)) << " | "
       << detail::fmt3(r.brse(i)) << " |";
    if (intervals) {
      const auto& iv = r.intervals[j];
      os << " (" << detail::fmt3(iv.credible.lo) << ", " << detail::fmt3(iv.credible.hi)
         << ") | (" << detail::fmt3(iv.robust.lo) << ", " << detail::fmt3(iv.robust.hi)
         << ") |";
    }
    os << "\n";
  }
  os << "\nMCMC diagnostics:\n";
  for (std::size_t j = 0; j < r.diagnostics.parameter_names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    os << "  " << r.diagnostics.parameter_names[j] << ": R-hat = " << std::fixed
       << std::setprecision(3) << r.diagnostics.rhat(i) << ", ESS = " << std::setprecision(0)
       << r.diagnostics.ess(i) << "\n";
  }
  if (!std::isnan(r.diagnostics.acceptance_rate))
    os << "  acceptance rate = " << std::setprecision(3) << r.diagnostics.acceptance_rate
       << "\n";
  for (const std::string& w : r.warnings) os << "  warning: " << w << "\n";
  return os.str();
}

// Full-precision JSON rendering.
inline nlohmann::json fit_report_to_json(const FitReport& r) {
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t j = 0; j < r.coef.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    const auto& iv = r.intervals[j];
    coefs.push_back({{"coefficient", r.coef[j]},
                     {"est", r.freq_est(i)},
                     {"se", r.freq_se(i)},
                     {"robust_se", r.freq_robust_se(i)},
                     {"bayes_est", r.bayes_est(i)},
                     {"post_sd", r.post_sd(i)},
                     {"brse", r.brse(i)},
                     {"credible_lo", iv.credible.lo},
                     {"credible_hi", iv.credible.hi},
                     {"robust_lo", iv.robust.lo},
                     {"robust_hi", iv.robust.hi}});
  }
  nlohmann::json diag;
  for (std::size_t j = 0; j < r.diagnostics.parameter_names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    diag[r.diagnostics.parameter_names[j]] = {{"rhat", r.diagnostics.rhat(i)},
                                              {"ess", r.diagnostics.ess(i)}};
  }
  return nlohmann::json{{"model", r.model},
                        {"n", r.n},
                        {"level", r.level},
                        {"coefficients", coefs},
                        {"diagnostics", diag},
                        {"warnings", r.warnings}};
}

// BrseResult alone, in its own tabular layout.
inline std::string render_brse_csv(const BrseResult& r,
                                   const std::vector<std::string>& coef_names) {
  std::ostringstream os;
  os << "coefficient,estimate,post_sd,brse,credible_lo,credible_hi,robust_lo,robust_hi\n";
  for (std::size_t j = 0; j < coef_names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    const auto& iv = r.intervals[j];
    os << coef_names[j] << ',' << detail::fmt3(r.d_hat(i)) << ',' << detail::fmt3(r.post_sd(i))
       << ',' << detail::fmt3(r.brse(i)) << ',' << detail::fmt3(iv.credible.lo) << ','
       << detail::fmt3(iv.credible.hi) << ',' << detail::fmt3(iv.robust.lo) << ','
       << detail::fmt3(iv.robust.hi) << '\n';
  }
  return os.str();
}

inline nlohmann::json brse_result_to_json(const BrseResult& r,
                                          const std::vector<std::string>& coef_names) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t j = 0; j < coef_names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    const auto& iv = r.intervals[j];
    rows.push_back({{"coefficient", coef_names[j]},
                    {"estimate", r.d_hat(i)},
                    {"post_sd", r.post_sd(i)},
                    {"brse", r.brse(i)},
                    {"credible_lo", iv.credible.lo},
                    {"credible_hi", iv.credible.hi},
                    {"robust_lo", iv.robust.lo},
                    {"robust_hi", iv.robust.hi}});
  }
  return rows;
}

// write-temp-then-rename so partially written reports are never observed
inline void atomic_write(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write to " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace brse

#endif  // BRSE_REPORT_HPP
