#include <algorithm>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hippo/evaluation.hpp"
#include "hippo/io.hpp"
#include "hippo/pipeline.hpp"
#include "hippo/simulation.hpp"

using namespace hippo;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineOptions {
  std::string method = "hippo";
  std::string penalty;
  std::string criterion = "bic";
  std::string gls = "inverse-variance";
  double scad_a = 3.7;
  int sweeps = 2;
  int grid_points = 30;
  double min_ratio = 1e-4;
  double variance_floor = 1.0;
  int max_support = 0;
  std::vector<double> lambda_s;
  std::vector<double> lambda_t;
  bool full_product = false;
  SolverConfig solver;
};

struct DataOptions {
  std::string x_path;
  std::string y_path;
  bool header = false;
  bool mean_intercept = true;
  bool var_intercept = true;
};

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

void add_pipeline_options(CLI::App* app, PipelineOptions& o) {
  app->add_option("--method", o.method, "hippo (SCAD) or hhr (l1)")
      ->check(CLI::IsMember({"hippo", "hhr"}))
      ->capture_default_str();
  app->add_option("--penalty", o.penalty, "scad or l1; must agree with --method")->check(CLI::IsMember({"scad", "l1"}));
  app->add_option("--criterion", o.criterion, "aic or bic")->check(CLI::IsMember({"aic", "bic"}))->capture_default_str();
  app->add_option("--gls-weights", o.gls, "mean reweighting: inverse-variance (1/sigma^2) or inverse-sd (1/sigma)")
      ->check(CLI::IsMember({"inverse-variance", "inverse-sd"}))
      ->capture_default_str();
  app->add_option("--scad-a", o.scad_a, "SCAD shape parameter")->capture_default_str();
  app->add_option("--sweeps", o.sweeps, "stage-2/stage-3 sweeps after stage 1")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--grid-points", o.grid_points, "automatic grid length")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--min-ratio", o.min_ratio, "smallest lambda as a fraction of lambda_max")->capture_default_str();
  app->add_option("--variance-floor", o.variance_floor, "variance grid floor in noise-level units (0 disables)")
      ->capture_default_str();
  app->add_option("--max-support", o.max_support, "path support cap (0: n/log n, negative: none)")->capture_default_str();
  app->add_option("--lambda-s", o.lambda_s, "explicit descending mean grid")->delimiter(',');
  app->add_option("--lambda-t", o.lambda_t, "explicit descending variance grid")->delimiter(',');
  app->add_flag("--full-product", o.full_product, "tune lambda pairs over the product grid");
  app->add_option("--max-inner-iters", o.solver.max_inner_iters)->capture_default_str();
  app->add_option("--inner-tol", o.solver.inner_tol)->capture_default_str();
  app->add_option("--max-lla-iters", o.solver.max_lla_iters)->capture_default_str();
  app->add_option("--lla-tol", o.solver.lla_tol)->capture_default_str();
  app->add_option("--kkt-tol", o.solver.kkt_tol)->capture_default_str();
}

void add_data_options(CLI::App* app, DataOptions& o) {
  app->add_option("--x", o.x_path, "covariate CSV (numeric, comma-separated)")->required();
  app->add_option("--y", o.y_path, "response CSV (one column)")->required();
  app->add_flag("--header", o.header, "skip the first line of each CSV");
  app->add_flag("--mean-intercept,!--no-mean-intercept", o.mean_intercept, "add an unpenalized mean intercept")
      ->capture_default_str();
  app->add_flag("--var-intercept,!--no-var-intercept", o.var_intercept, "add an unpenalized variance intercept")
      ->capture_default_str();
}

PenaltyFamily method_family(const PipelineOptions& o) {
  const PenaltyFamily from_method = o.method == "hhr" ? PenaltyFamily::L1 : PenaltyFamily::SCAD;
  if (!o.penalty.empty() && parse_penalty_family(o.penalty) != from_method) {
    throw UsageError("--method " + o.method + " cannot be combined with --penalty " + o.penalty);
  }
  return from_method;
}

PipelineConfig make_config(const PipelineOptions& o) {
  PipelineConfig cfg;
  cfg.penalty_family = method_family(o);
  cfg.scad_a = o.scad_a;
  cfg.n_sweeps = o.sweeps;
  cfg.gls_weights = parse_gls_weights(o.gls);
  cfg.solver = o.solver;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

GridSpec make_grid(const PipelineOptions& o) {
  GridSpec g;
  g.criterion = parse_criterion(o.criterion);
  g.n_points = o.grid_points;
  g.min_ratio = o.min_ratio;
  g.variance_floor = o.variance_floor;
  g.max_support = o.max_support;
  g.lambda_s_grid = o.lambda_s;
  g.lambda_t_grid = o.lambda_t;
  g.full_product = o.full_product;
  try {
    g.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return g;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

std::vector<Estimator> parse_estimators(const std::vector<std::string>& names) {
  std::vector<Estimator> out;
  for (const auto& raw : names) {
    std::string s = raw;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    const auto dash = s.find('-');
    if (dash == std::string::npos) throw UsageError("estimator '" + raw + "' must look like HIPPO-BIC");
    const std::string m = s.substr(0, dash);
    const std::string c = s.substr(dash + 1);
    Estimator e;
    if (m == "HIPPO") {
      e.method = PenaltyFamily::SCAD;
    } else if (m == "HHR") {
      e.method = PenaltyFamily::L1;
    } else {
      throw UsageError("unknown estimator method in '" + raw + "'");
    }
    if (c == "AIC") {
      e.criterion = Criterion::AIC;
    } else if (c == "BIC") {
      e.criterion = Criterion::BIC;
    } else {
      throw UsageError("unknown estimator criterion in '" + raw + "'");
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse heteroscedastic regression: fitting, simulation, cross validation and diagnostics"};
  app.require_subcommand(1);

  PipelineOptions fit_opts, cv_opts, diag_opts, sim_opts;
  DataOptions fit_data, cv_data, diag_data;

  // fit
  auto* fit = app.add_subcommand("fit", "fit one model and write it as JSON");
  add_data_options(fit, fit_data);
  add_pipeline_options(fit, fit_opts);
  std::string fit_out;
  fit->add_option("--out,-o", fit_out, "output JSON path (default stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo study on the built-in designs");
  std::string sim_example = "1";
  std::size_t sim_n = 0;
  std::size_t sim_p = 0;
  double sim_rho = 0.0;
  int sim_reps = 100;
  std::uint64_t sim_seed = kDefaultSeed;
  int sim_jobs = default_jobs();
  std::vector<std::string> sim_estimators;
  std::string sim_tsv, sim_json;
  sim->add_option("--example", sim_example, "1, 2 or custom")
      ->check(CLI::IsMember({"1", "2", "custom"}))
      ->capture_default_str();
  sim->add_option("--n", sim_n, "sample size (default 200)");
  sim->add_option("--p", sim_p, "dimension (default 2000 for example 1, 600 otherwise)");
  sim->add_option("--rho", sim_rho, "equicorrelation of the variance covariates (example 1)")->capture_default_str();
  sim->add_option("--reps", sim_reps, "replicates")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--seed", sim_seed, "master seed")->capture_default_str();
  sim->add_option("--jobs", sim_jobs, "worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--estimators", sim_estimators, "e.g. HHR-BIC,HIPPO-BIC (default all four)")->delimiter(',');
  sim->add_option("--tsv", sim_tsv, "table output path (default stdout)");
  sim->add_option("--json", sim_json, "full per-replicate JSON output path");
  add_pipeline_options(sim, sim_opts);

  // cv
  auto* cv = app.add_subcommand("cv", "k-fold cross validation of HIPPO and HHR");
  add_data_options(cv, cv_data);
  add_pipeline_options(cv, cv_opts);
  int cv_folds = 10;
  std::uint64_t cv_seed = kDefaultSeed;
  int cv_jobs = default_jobs();
  std::vector<std::string> cv_methods{"hippo", "hhr"};
  std::string cv_out;
  cv->add_option("--folds,-k", cv_folds, "number of folds")->capture_default_str();
  cv->add_option("--seed", cv_seed, "fold shuffle seed")->capture_default_str();
  cv->add_option("--jobs", cv_jobs, "worker threads")->check(CLI::PositiveNumber);
  cv->add_option("--methods", cv_methods, "methods to compare")->delimiter(',')->check(CLI::IsMember({"hippo", "hhr"}));
  cv->add_option("--out,-o", cv_out, "table output path (default stdout)");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "binned studentized residuals and F-tests of equal variance");
  add_data_options(diag, diag_data);
  add_pipeline_options(diag, diag_opts);
  int diag_bins = 3;
  std::vector<double> diag_breaks;
  std::string diag_out;
  diag->add_option("--bins", diag_bins, "equal-count bins of fitted values")->capture_default_str();
  diag->add_option("--breaks", diag_breaks, "explicit increasing breakpoints")->delimiter(',');
  diag->add_option("--out,-o", diag_out, "output path (default stdout)");

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV files");
  std::string gen_example = "custom";
  std::size_t gen_n = 900;
  std::size_t gen_p = 31;
  double gen_rho = 0.0;
  std::uint64_t gen_seed = kDefaultSeed;
  std::string gen_x, gen_y;
  gen->add_option("--example", gen_example, "1, 2 or custom")
      ->check(CLI::IsMember({"1", "2", "custom"}))
      ->capture_default_str();
  gen->add_option("--n", gen_n)->capture_default_str();
  gen->add_option("--p", gen_p)->capture_default_str();
  gen->add_option("--rho", gen_rho)->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--x-out", gen_x)->required();
  gen->add_option("--y-out", gen_y)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) {
      const PipelineConfig cfg = make_config(fit_opts);
      const GridSpec grid = make_grid(fit_opts);
      const Dataset d =
          load_dataset(fit_data.x_path, fit_data.y_path, fit_data.header, fit_data.mean_intercept, fit_data.var_intercept);
      const FitResult r = fit_hippo(d, grid, cfg);
      if (r.homoscedastic_fallback) {
        std::cerr << "note: residuals are degenerate; variance model fell back to intercept only\n";
      }
      emit(fit_out, fit_to_json(r, d) + "\n");
    } else if (sim->parsed()) {
      const PipelineConfig cfg = make_config(sim_opts);
      const GridSpec grid = make_grid(sim_opts);
      SimulationSpec spec;
      spec.example = sim_example == "1" ? Example::Ex1 : sim_example == "2" ? Example::Ex2 : Example::Custom;
      spec.n = sim_n ? sim_n : 200;
      spec.p = sim_p ? sim_p : (spec.example == Example::Ex1 ? 2000 : spec.example == Example::Ex2 ? 600 : 31);
      spec.rho = sim_rho;
      spec.reps = sim_reps;
      spec.master_seed = sim_seed;
      spec.jobs = sim_jobs;
      if (!sim_estimators.empty()) spec.estimators = parse_estimators(sim_estimators);
      try {
        spec.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const SimulationReport rep = run_monte_carlo(spec, cfg, grid);
      emit(sim_tsv, report_to_tsv(rep));
      if (!sim_json.empty()) write_file(sim_json, report_to_json(rep) + "\n");
      if (!rep.failures.empty()) std::cerr << rep.failures.size() << " replicate fit(s) failed; see JSON\n";
      if (rep.mm_violations > 0) std::cerr << "warning: " << rep.mm_violations << " MM monotonicity violation(s)\n";
    } else if (cv->parsed()) {
      if (cv_folds < 2) throw UsageError("--folds must be at least 2");
      const GridSpec grid = make_grid(cv_opts);
      const Dataset d =
          load_dataset(cv_data.x_path, cv_data.y_path, cv_data.header, cv_data.mean_intercept, cv_data.var_intercept);
      if (d.n() < static_cast<std::size_t>(cv_folds)) throw UsageError("--folds exceeds the number of rows");
      std::vector<CvRow> rows;
      for (const auto& m : cv_methods) {
        PipelineOptions o = cv_opts;
        o.method = m;
        o.penalty.clear();
        const PipelineConfig cfg = make_config(o);
        rows.push_back({m == "hhr" ? "HHR" : "HIPPO",
                        kfold_cv(d, static_cast<std::size_t>(cv_folds), grid, cfg, cv_seed, cv_jobs)});
        for (std::size_t k = 0; k < rows.back().metrics.skipped_folds.size(); ++k) {
          std::cerr << rows.back().method << ": fold " << rows.back().metrics.skipped_folds[k]
                    << " skipped: " << rows.back().metrics.skip_reasons[k] << "\n";
        }
      }
      emit(cv_out, cv_to_tsv(rows));
    } else if (diag->parsed()) {
      const PipelineConfig cfg = make_config(diag_opts);
      const GridSpec grid = make_grid(diag_opts);
      const Dataset d = load_dataset(diag_data.x_path, diag_data.y_path, diag_data.header, diag_data.mean_intercept,
                                     diag_data.var_intercept);
      const FitResult r = fit_hippo(d, grid, cfg);
      const Vector fitted = predict_mean(d, r.params);
      const Vector resid = residuals(d, r.params);
      const std::vector<double> breaks = diag_breaks.empty() ? quantile_breaks(fitted, diag_bins) : diag_breaks;
      emit(diag_out, diagnostics_to_text(heteroscedasticity_diagnostics(fitted, resid, Vector(), breaks)));
    } else if (gen->parsed()) {
      GeneratedData g = gen_example == "1"   ? generate_example1(gen_n, gen_p, gen_rho, gen_seed)
                        : gen_example == "2" ? generate_example2(gen_n, gen_seed, gen_p)
                                             : generate_heteroscedastic_standin(gen_n, gen_p, gen_seed);
      std::ostringstream xs, ys;
      xs.precision(17);
      ys.precision(17);
      const Matrix& x = g.data.x();
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) xs << (j ? "," : "") << x(i, j);
        xs << '\n';
        ys << g.data.y()(i) << '\n';
      }
      write_file(gen_x, xs.str());
      write_file(gen_y, ys.str());
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
