// Command-line front end: fit regression models on CSV data with both frequentist and
// Bayesian robust standard errors, run the simulation campaigns, and print limiting
// points of misspecified fits.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "brse/brse.hpp"
#include "brse/csv.hpp"
#include "brse/dgp.hpp"
#include "brse/freq.hpp"
#include "brse/posterior.hpp"
#include "brse/report.hpp"
#include "brse/sim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

brse::ModelSpec model_from_name(const std::string& name, double assumed_variance) {
  if (name == "linear") return brse::ModelSpec::linear();
  if (name == "poisson") return brse::ModelSpec::poisson();
  if (name == "exponential-ph") return brse::ModelSpec::exponential_ph();
  if (name == "normal-mean") return brse::ModelSpec::normal_mean(assumed_variance);
  throw CLI::ValidationError("--model", "unknown model family: " + name);
}

void emit(const std::string& content, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << content;
  } else {
    brse::atomic_write(output_path, content);
  }
}

struct FitArgs {
  std::string data_path;
  std::string model = "linear";
  double assumed_variance = 1.0;
  std::vector<std::string> outcome;
  bool average = false;
  std::vector<std::string> covariates;
  bool no_intercept = false;
  std::string time_col, event_col;
  std::vector<double> prior_mean{0.0};
  std::vector<double> prior_var{1e3};
  double sigma2_shape = 0.01;
  double sigma2_rate = 0.01;
  int chains = 3;
  int iters = 30000;
  int burnin = 18000;
  int thin = 1;
  double level = 0.95;
  std::uint64_t seed = 1;
  std::string format = "markdown";
  std::string output;
  bool intervals = false;
  bool quantile_intervals = false;
  std::string dump_draws;
};

int run_fit(const FitArgs& args) {
  const brse::ModelSpec model = model_from_name(args.model, args.assumed_variance);
  brse::Formula formula;
  formula.outcome = args.outcome;
  formula.average = args.average;
  formula.covariates = args.covariates;
  formula.intercept = !args.no_intercept;
  formula.time_col = args.time_col;
  formula.event_col = args.event_col;

  const brse::IngestResult ingest = brse::ingest_csv(args.data_path, formula, model);
  for (const std::string& w : ingest.warnings) std::cerr << "warning: " << w << "\n";
  const int p = ingest.data.p();

  auto spread = [p](const std::vector<double>& v, const char* what) {
    if (v.size() == 1) return Eigen::VectorXd::Constant(p, v[0]).eval();
    if (static_cast<int>(v.size()) != p)
      throw std::invalid_argument(std::string(what) + " needs 1 or p values");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), p).eval();
  };
  brse::PriorSpec prior =
      brse::PriorSpec::normal(spread(args.prior_mean, "--prior-mean"),
                              spread(args.prior_var, "--prior-var"));
  prior.inv_gamma_sigma2(args.sigma2_shape, args.sigma2_rate);

  brse::McmcConfig mcmc;
  mcmc.n_chains = args.chains;
  mcmc.n_iter = args.iters;
  mcmc.n_burnin = args.burnin;
  mcmc.thin = args.thin;
  mcmc.seed = args.seed;

  const brse::FreqFit fit = brse::fit_mle(model, ingest.data);
  const brse::PosteriorSample sample =
      brse::sample_posterior(model, prior, ingest.data, mcmc);
  const brse::BrseResult result = brse::brse_from_sample(
      model, sample, ingest.data, args.level, args.quantile_intervals);
  const brse::FitReport report = brse::make_fit_report(args.model, ingest.coef_names,
                                                       ingest.data, fit, result, sample);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";

  if (!args.dump_draws.empty()) {
    std::ostringstream os;
    brse::write_draws_csv(sample, os);
    brse::atomic_write(args.dump_draws, os.str());
  }

  if (args.format == "csv") {
    emit(brse::render_fit_csv(report, args.intervals), args.output);
  } else if (args.format == "json") {
    emit(brse::fit_report_to_json(report).dump(2) + "\n", args.output);
  } else if (args.format == "markdown") {
    emit(brse::render_fit_markdown(report, args.intervals), args.output);
  } else {
    throw CLI::ValidationError("--format", "unknown format: " + args.format);
  }
  return result.ok() ? kExitOk : kExitNumeric;
}

struct SimulateArgs {
  std::string grid;
  std::string family;
  int n = 100;
  double a = 0.0;
  double kappa = 1.0;
  double beta2 = -0.5;
  int reps = 1000;
  std::uint64_t seed = 7;
  double level = 0.95;
  int chains = 1;
  int iters = 6000;
  int burnin = 1000;
  int thin = 1;
  std::int64_t kl_oracle_n = 0;
  std::string format = "markdown";
  std::string output;
  std::string per_rep;
};

brse::DgpSpec inline_dgp(const SimulateArgs& args) {
  if (args.family == "linear") return brse::DgpSpec::linear_quadratic(args.n, args.a);
  if (args.family == "poisson") return brse::DgpSpec::poisson_quadratic(args.n, args.a);
  if (args.family == "weibull-ph")
    return brse::DgpSpec::weibull_ph(args.n, args.kappa, args.beta2);
  if (args.family == "fixed-linear")
    return brse::DgpSpec::fixed_design_linear(args.n, args.a);
  throw CLI::ValidationError("--family", "unknown process family: " + args.family);
}

int run_simulate(const SimulateArgs& args) {
  std::vector<brse::DgpSpec> scenarios;
  if (!args.grid.empty()) {
    scenarios = brse::grid_scenarios(args.grid);
  } else if (!args.family.empty()) {
    scenarios.push_back(inline_dgp(args));
  } else {
    throw CLI::ValidationError("simulate", "either --grid or --family is required");
  }
  if (!args.per_rep.empty() && scenarios.size() != 1)
    throw CLI::ValidationError("--per-rep", "per-replicate output needs a single scenario");

  std::vector<brse::SimReport> reports;
  reports.reserve(scenarios.size());
  for (const brse::DgpSpec& dgp : scenarios) {
    brse::SimConfig cfg;
    cfg.dgp = dgp;
    cfg.n_reps = args.reps;
    cfg.seed = args.seed;
    cfg.level = args.level;
    cfg.kl_oracle_n = args.kl_oracle_n;
    cfg.mcmc = brse::sim_default_mcmc();
    cfg.mcmc.n_chains = args.chains;
    cfg.mcmc.n_iter = args.iters;
    cfg.mcmc.n_burnin = args.burnin;
    cfg.mcmc.thin = args.thin;

    std::vector<brse::RepRecord> records;
    const brse::SimReport report =
        brse::run_scenario(cfg, args.per_rep.empty() ? nullptr : &records);
    if (!report.valid)
      std::cerr << "warning: scenario '" << report.scenario << "' marked invalid ("
                << report.n_failed_reps << " failed replicates)\n";
    if (!args.per_rep.empty()) {
      std::ostringstream os;
      brse::write_per_rep_csv(records, os);
      brse::atomic_write(args.per_rep, os.str());
    }
    reports.push_back(report);
    std::cerr << "done: " << report.scenario << "\n";
  }

  if (args.format == "csv") {
    std::ostringstream os;
    brse::write_sim_csv(reports, os);
    emit(os.str(), args.output);
  } else if (args.format == "markdown") {
    std::ostringstream os;
    brse::write_sim_markdown(reports, os);
    emit(os.str(), args.output);
  } else if (args.format == "json") {
    nlohmann::json rows = nlohmann::json::array();
    for (const brse::SimReport& r : reports) {
      rows.push_back({{"scenario", r.scenario},
                      {"n", r.n},
                      {"n_reps", r.n_reps},
                      {"kl_slope", r.kl_slope},
                      {"kl_slope_mcse", r.kl_slope_mcse},
                      {"ave_d_hat", r.ave_d_hat},
                      {"se_d_hat", r.se_d_hat},
                      {"ave_post_sd", r.ave_post_sd},
                      {"ave_brse", r.ave_brse},
                      {"coverage_credible", r.coverage_credible},
                      {"coverage_freq_robust", r.coverage_freq_robust},
                      {"coverage_bayes_robust", r.coverage_bayes_robust},
                      {"avg_events", r.avg_events},
                      {"n_failed", r.n_failed_reps},
                      {"valid", r.valid}});
    }
    emit(rows.dump(2) + "\n", args.output);
  } else {
    throw CLI::ValidationError("--format", "unknown format: " + args.format);
  }
  return kExitOk;
}

struct KlArgs {
  std::string family = "linear";
  int n = 100;
  double a = 0.0;
  double kappa = 1.0;
  double beta2 = -0.5;
  std::int64_t oracle_n = 0;
  std::string format = "text";
};

int run_kl_point(const KlArgs& args) {
  SimulateArgs sim;
  sim.family = args.family;
  sim.n = args.n;
  sim.a = args.a;
  sim.kappa = args.kappa;
  sim.beta2 = args.beta2;
  const brse::DgpSpec dgp = inline_dgp(sim);
  const brse::KlPoint kl = brse::kl_point(dgp, brse::model_for(dgp), args.oracle_n);
  if (args.format == "json") {
    nlohmann::json out{{"scenario", dgp.label()},
                       {"theta_star", {kl.theta_star(0), kl.theta_star(1)}},
                       {"mcse", {kl.mcse(0), kl.mcse(1)}}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << dgp.label() << "\n";
    std::cout.precision(10);
    std::cout << "theta*: " << kl.theta_star.transpose() << "\n";
    std::cout << "mcse:   " << kl.mcse.transpose() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian robust (sandwich) standard errors for parametric regression"};
  app.require_subcommand(1);
  app.set_config("--config", "", "plain-text key=value file mirroring the flags");

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model on CSV data");
  fit_cmd->add_option("--data", fit.data_path, "input CSV file (header row required)")
      ->required();
  fit_cmd->add_option("--model", fit.model,
                      "model family: linear, poisson, exponential-ph, normal-mean");
  fit_cmd->add_option("--assumed-variance", fit.assumed_variance,
                      "fixed outcome variance (normal-mean only)");
  fit_cmd->add_option("--outcome", fit.outcome, "outcome column (two columns with --average)")
      ->delimiter(',');
  fit_cmd->add_flag("--average", fit.average, "outcome is the mean of two columns");
  fit_cmd->add_option("--covariates", fit.covariates, "covariate columns")->delimiter(',');
  fit_cmd->add_flag("--no-intercept", fit.no_intercept, "do not prepend an intercept");
  fit_cmd->add_option("--time", fit.time_col, "time column (exponential-ph)");
  fit_cmd->add_option("--event", fit.event_col, "event indicator column (exponential-ph)");
  fit_cmd->add_option("--prior-mean", fit.prior_mean, "coefficient prior means")
      ->delimiter(',');
  fit_cmd->add_option("--prior-var", fit.prior_var, "coefficient prior variances")
      ->delimiter(',');
  fit_cmd->add_option("--sigma2-shape", fit.sigma2_shape, "inverse-gamma shape for sigma^2");
  fit_cmd->add_option("--sigma2-rate", fit.sigma2_rate, "inverse-gamma rate for sigma^2");
  fit_cmd->add_option("--chains", fit.chains, "number of MCMC chains");
  fit_cmd->add_option("--iters", fit.iters, "iterations per chain");
  fit_cmd->add_option("--burnin", fit.burnin, "burn-in iterations per chain");
  fit_cmd->add_option("--thin", fit.thin, "thinning stride");
  fit_cmd->add_option("--level", fit.level, "interval level");
  fit_cmd->add_option("--seed", fit.seed, "random seed");
  fit_cmd->add_option("--format", fit.format, "output format: csv, markdown, json");
  fit_cmd->add_option("--output", fit.output, "output file (stdout when omitted)");
  fit_cmd->add_flag("--intervals", fit.intervals, "include interval columns");
  fit_cmd->add_flag("--quantile-intervals", fit.quantile_intervals,
                    "credible intervals from posterior quantiles");
  fit_cmd->add_option("--dump-draws", fit.dump_draws, "write retained draws to a CSV file");

  SimulateArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run replicated simulation scenarios");
  sim_cmd->add_option("--grid", sim.grid,
                      "scenario grid: table1, table2, table3, tableS1, figure1");
  sim_cmd->add_option("--family", sim.family,
                      "inline scenario family: linear, poisson, weibull-ph, fixed-linear");
  sim_cmd->add_option("--n", sim.n, "inline scenario sample size");
  sim_cmd->add_option("--a", sim.a, "quadratic distortion (linear / poisson)");
  sim_cmd->add_option("--kappa", sim.kappa, "Weibull shape (weibull-ph)");
  sim_cmd->add_option("--beta2", sim.beta2, "hazard slope (weibull-ph)");
  sim_cmd->add_option("--reps", sim.reps, "replicates per scenario");
  sim_cmd->add_option("--seed", sim.seed, "master seed");
  sim_cmd->add_option("--level", sim.level, "interval level");
  sim_cmd->add_option("--chains", sim.chains, "MCMC chains per replicate");
  sim_cmd->add_option("--iters", sim.iters, "MCMC iterations per replicate");
  sim_cmd->add_option("--burnin", sim.burnin, "MCMC burn-in per replicate");
  sim_cmd->add_option("--thin", sim.thin, "thinning stride");
  sim_cmd->add_option("--kl-oracle-n", sim.kl_oracle_n,
                      "override the oracle population size for theta*");
  sim_cmd->add_option("--format", sim.format, "output format: csv, markdown, json");
  sim_cmd->add_option("--output", sim.output, "output file (stdout when omitted)");
  sim_cmd->add_option("--per-rep", sim.per_rep,
                      "per-replicate CSV output (single scenario only)");

  KlArgs kl;
  CLI::App* kl_cmd =
      app.add_subcommand("kl-point", "limiting point of the misspecified fit");
  kl_cmd->add_option("--family", kl.family,
                     "process family: linear, poisson, weibull-ph, fixed-linear");
  kl_cmd->add_option("--n", kl.n, "sample size (fixed design only)");
  kl_cmd->add_option("--a", kl.a, "quadratic distortion");
  kl_cmd->add_option("--kappa", kl.kappa, "Weibull shape");
  kl_cmd->add_option("--beta2", kl.beta2, "hazard slope");
  kl_cmd->add_option("--oracle-n", kl.oracle_n, "oracle population size override");
  kl_cmd->add_option("--format", kl.format, "output format: text, json");

  try {
    app.parse(argc, argv);
    if (fit_cmd->parsed()) return run_fit(fit);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (kl_cmd->parsed()) return run_kl_point(kl);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const brse::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const brse::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
