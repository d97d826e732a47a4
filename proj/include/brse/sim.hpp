#ifndef BRSE_SIM_HPP
#define BRSE_SIM_HPP

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "brse/brse.hpp"
#include "brse/dgp.hpp"
#include "brse/freq.hpp"
#include "brse/posterior.hpp"

namespace brse {

// Per-replicate sampler configuration for simulation campaigns, sized so that
// thousand-replicate runs stay desk-scale. Full-fidelity settings can be restored
// through SimConfig::mcmc.
inline McmcConfig sim_default_mcmc() {
  McmcConfig cfg;
  cfg.n_chains = 1;
  cfg.n_iter = 6000;
  cfg.n_burnin = 1000;
  return cfg;
}

struct SimConfig {
  DgpSpec dgp;
  int n_reps = 1000;
  McmcConfig mcmc = sim_default_mcmc();
  std::uint64_t seed = 1;
  double level = 0.95;
  std::int64_t kl_oracle_n = 0;  // 0 = family default
};

struct RepRecord {
  bool failed = false;
  std::string error;
  double d_hat = std::numeric_limits<double>::quiet_NaN();
  double post_sd = std::numeric_limits<double>::quiet_NaN();
  double brse = std::numeric_limits<double>::quiet_NaN();
  double freq_est = std::numeric_limits<double>::quiet_NaN();
  double robust_se = std::numeric_limits<double>::quiet_NaN();
  bool cov_credible = false;
  bool cov_freq = false;
  bool cov_bayes = false;
  double events = std::numeric_limits<double>::quiet_NaN();
};

struct SimReport {
  std::string scenario;
  int n = 0;
  int n_reps = 0;
  double kl_slope = std::numeric_limits<double>::quiet_NaN();
  double kl_slope_mcse = 0.0;
  double ave_d_hat = std::numeric_limits<double>::quiet_NaN();
  double se_d_hat = std::numeric_limits<double>::quiet_NaN();  // NaN for a single replicate
  double ave_post_sd = std::numeric_limits<double>::quiet_NaN();
  double ave_brse = std::numeric_limits<double>::quiet_NaN();
  double coverage_credible = std::numeric_limits<double>::quiet_NaN();
  double coverage_freq_robust = std::numeric_limits<double>::quiet_NaN();
  double coverage_bayes_robust = std::numeric_limits<double>::quiet_NaN();
  double avg_events = std::numeric_limits<double>::quiet_NaN();
  int n_failed_reps = 0;
  bool valid = true;
};

inline unsigned worker_count() {
  if (const char* env = std::getenv("BRSE_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// theta* per scenario is recomputed only once per process; the Poisson oracle in
// particular is a 1e7-draw fit.
inline KlPoint cached_kl_point(const DgpSpec& dgp, std::int64_t oracle_n = 0) {
  static std::map<std::string, KlPoint> cache;
  static std::mutex mutex;
  const std::string key =
      dgp.limit_key() + (oracle_n > 0 ? "#" + std::to_string(oracle_n) : "");
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const KlPoint kl = kl_point(dgp, model_for(dgp), oracle_n);
  std::lock_guard<std::mutex> lock(mutex);
  cache.emplace(key, kl);
  return kl;
}

namespace detail {

inline RepRecord run_replicate(const SimConfig& cfg, const ModelSpec& model,
                               const PriorSpec& prior, double theta_star_slope, double z,
                               int rep) {
  RepRecord rec;
  const std::uint64_t rep_seed =
      derive_seed(cfg.seed, hash_string(0x5CE7ULL, cfg.dgp.label()), rep);
  try {
    const Dataset data = generate(cfg.dgp, rep_seed);
    const int slope = data.p() - 1;
    const FreqFit fit = fit_mle(model, data);

    McmcConfig mcmc = cfg.mcmc;
    mcmc.seed = derive_seed(rep_seed, 0xBA7E5ULL);
    const PosteriorSample sample = sample_posterior(model, prior, data, mcmc);
    const BrseResult result = brse_from_sample(model, sample, data, cfg.level);
    if (!result.ok())
      throw numeric_error("nonpositive diagonal in the robust covariance estimate");

    rec.d_hat = result.d_hat(slope);
    rec.post_sd = result.post_sd(slope);
    rec.brse = result.brse(slope);
    rec.freq_est = fit.theta_mle(slope);
    rec.robust_se = fit.robust_se(slope);
    const auto& iv = result.intervals[static_cast<std::size_t>(slope)];
    rec.cov_credible = iv.credible.lo <= theta_star_slope && theta_star_slope <= iv.credible.hi;
    rec.cov_bayes = iv.robust.lo <= theta_star_slope && theta_star_slope <= iv.robust.hi;
    rec.cov_freq = std::fabs(fit.theta_mle(slope) - theta_star_slope) <=
                   z * fit.robust_se(slope);
    if (data.has_survival_fields()) rec.events = data.events().sum();
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace detail

// Deterministic ordered aggregation of replicate records; kept separate so the
// invalid-scenario rule is testable on synthetic records.
inline SimReport aggregate_records(const DgpSpec& dgp, const KlPoint& kl,
                                   const std::vector<RepRecord>& records) {
  SimReport report;
  report.scenario = dgp.label();
  report.n = dgp.n;
  report.n_reps = static_cast<int>(records.size());
  report.kl_slope = kl.theta_star(1);
  report.kl_slope_mcse = kl.mcse(1);

  double sum_d = 0.0, sum_psd = 0.0, sum_brse = 0.0, sum_events = 0.0;
  int used = 0, cov_c = 0, cov_f = 0, cov_b = 0;
  for (const RepRecord& r : records) {
    if (r.failed) {
      ++report.n_failed_reps;
      continue;
    }
    ++used;
    sum_d += r.d_hat;
    sum_psd += r.post_sd;
    sum_brse += r.brse;
    cov_c += r.cov_credible ? 1 : 0;
    cov_f += r.cov_freq ? 1 : 0;
    cov_b += r.cov_bayes ? 1 : 0;
    if (!std::isnan(r.events)) sum_events += r.events;
  }
  if (used > 0) {
    report.ave_d_hat = sum_d / used;
    report.ave_post_sd = sum_psd / used;
    report.ave_brse = sum_brse / used;
    report.coverage_credible = static_cast<double>(cov_c) / used;
    report.coverage_freq_robust = static_cast<double>(cov_f) / used;
    report.coverage_bayes_robust = static_cast<double>(cov_b) / used;
    if (dgp.is_survival()) report.avg_events = sum_events / used;
  }
  if (used > 1) {
    double ss = 0.0;
    for (const RepRecord& r : records)
      if (!r.failed) ss += (r.d_hat - report.ave_d_hat) * (r.d_hat - report.ave_d_hat);
    report.se_d_hat = std::sqrt(ss / (used - 1));
  }
  report.valid = report.n_failed_reps <= 0.05 * report.n_reps;
  return report;
}

// Replicated experiment for one scenario: generate, fit both routes, cover theta*,
// aggregate. Replicates are independent seeded streams run on a worker pool; results
// land in a slot per replicate, so aggregates do not depend on scheduling.
inline SimReport run_scenario(const SimConfig& cfg,
                              std::vector<RepRecord>* per_rep = nullptr) {
  cfg.dgp.validate();
  cfg.mcmc.validate();
  if (cfg.n_reps < 1) throw std::invalid_argument("n_reps must be positive");
  const ModelSpec model = model_for(cfg.dgp);
  const PriorSpec prior = prior_for(cfg.dgp);
  const KlPoint kl = cached_kl_point(cfg.dgp, cfg.kl_oracle_n);
  const double z = normal_quantile(0.5 + cfg.level / 2.0);

  std::vector<RepRecord> records(static_cast<std::size_t>(cfg.n_reps));
  const unsigned workers =
      std::min<unsigned>(worker_count(), static_cast<unsigned>(cfg.n_reps));
  if (workers <= 1) {
    for (int i = 0; i < cfg.n_reps; ++i)
      records[static_cast<std::size_t>(i)] =
          detail::run_replicate(cfg, model, prior, kl.theta_star(1), z, i);
  } else {
    std::atomic<int> next{0};
    auto work = [&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= cfg.n_reps) break;
        records[static_cast<std::size_t>(i)] =
            detail::run_replicate(cfg, model, prior, kl.theta_star(1), z, i);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  const SimReport report = aggregate_records(cfg.dgp, kl, records);
  if (per_rep) *per_rep = std::move(records);
  return report;
}

inline SimReport run_fixed_design(const SimConfig& cfg,
                                  std::vector<RepRecord>* per_rep = nullptr) {
  if (!cfg.dgp.is_fixed_design())
    throw std::invalid_argument("run_fixed_design requires the fixed-design process");
  return run_scenario(cfg, per_rep);
}

// Built-in scenario grids.
inline std::vector<DgpSpec> grid_scenarios(const std::string& name) {
  std::vector<DgpSpec> out;
  const auto linear_grid = [&out](bool fixed) {
    for (int n : {50, 100})
      for (double a : {-2.0, -1.0, 0.0, 1.0, 2.0})
        out.push_back(fixed ? DgpSpec::fixed_design_linear(n, a)
                            : DgpSpec::linear_quadratic(n, a));
  };
  if (name == "table1") {
    linear_grid(false);
  } else if (name == "table2") {
    for (int n : {50, 100})
      for (double a : {-0.5, -0.25, 0.0, 0.25, 0.5})
        out.push_back(DgpSpec::poisson_quadratic(n, a));
  } else if (name == "table3") {
    for (int n : {50, 100})
      for (double kappa : {0.8, 1.0, 1.5})
        for (double beta2 : {0.0, -0.25, -0.5})
          out.push_back(DgpSpec::weibull_ph(n, kappa, beta2));
  } else if (name == "tableS1") {
    linear_grid(true);
  } else if (name == "figure1") {
    for (const char* part : {"table1", "table2", "table3"})
      for (const DgpSpec& d : grid_scenarios(part)) out.push_back(d);
  } else {
    throw data_error("unknown scenario grid: " + name);
  }
  return out;
}

namespace detail {

inline std::string fixed3(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

}  // namespace detail

inline void write_sim_csv(const std::vector<SimReport>& reports, std::ostream& os) {
  os << "scenario,n,n_reps,kl_slope,ave_d_hat,se_d_hat,ave_post_sd,ave_brse,"
        "coverage_credible,coverage_freq_robust,coverage_bayes_robust,avg_events,"
        "n_failed,valid\n";
  for (const SimReport& r : reports) {
    os << r.scenario << ',' << r.n << ',' << r.n_reps << ',' << detail::fixed3(r.kl_slope)
       << ',' << detail::fixed3(r.ave_d_hat) << ',' << detail::fixed3(r.se_d_hat) << ','
       << detail::fixed3(r.ave_post_sd) << ',' << detail::fixed3(r.ave_brse) << ','
       << detail::fixed3(r.coverage_credible) << ','
       << detail::fixed3(r.coverage_freq_robust) << ','
       << detail::fixed3(r.coverage_bayes_robust) << ',' << detail::fixed3(r.avg_events)
       << ',' << r.n_failed_reps << ',' << (r.valid ? 1 : 0) << '\n';
  }
}

inline void write_sim_markdown(const std::vector<SimReport>& reports, std::ostream& os) {
  os << "| scenario | n | reps | theta* | Ave(d) | SE(d) | Ave(Post.SD) | Ave(BRSE) | "
        "cov.cred | cov.freq | cov.bayes | #E | failed |\n";
  os << "|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const SimReport& r : reports) {
    os << "| " << r.scenario << " | " << r.n << " | " << r.n_reps << " | "
       << detail::fixed3(r.kl_slope) << " | " << detail::fixed3(r.ave_d_hat) << " | "
       << detail::fixed3(r.se_d_hat) << " | " << detail::fixed3(r.ave_post_sd) << " | "
       << detail::fixed3(r.ave_brse) << " | " << detail::fixed3(r.coverage_credible)
       << " | " << detail::fixed3(r.coverage_freq_robust) << " | "
       << detail::fixed3(r.coverage_bayes_robust) << " | " << detail::fixed3(r.avg_events)
       << " | " << r.n_failed_reps << " |\n";
  }
}

// Raw per-replicate rows, for coverage-curve plots and reanalysis.
inline void write_per_rep_csv(const std::vector<RepRecord>& records, std::ostream& os) {
  os << "rep,failed,d_hat,post_sd,brse,freq_est,robust_se,cov_credible,cov_freq,"
        "cov_bayes,events,error\n";
  os.precision(17);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RepRecord& r = records[i];
    os << i << ',' << (r.failed ? 1 : 0) << ',' << r.d_hat << ',' << r.post_sd << ','
       << r.brse << ',' << r.freq_est << ',' << r.robust_se << ','
       << (r.cov_credible ? 1 : 0) << ',' << (r.cov_freq ? 1 : 0) << ','
       << (r.cov_bayes ? 1 : 0) << ',' << r.events << ',' << r.error << '\n';
  }
}

}  // namespace brse

#endif  // BRSE_SIM_HPP
