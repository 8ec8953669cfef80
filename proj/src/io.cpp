#include "hippo/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hippo/stats.hpp"
#include "json.hpp"

namespace hippo {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& name, std::size_t row, std::size_t col) {
  return name + ": row " + std::to_string(row) + ", column " + std::to_string(col);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

std::string example_name(Example e) {
  switch (e) {
    case Example::Ex1:
      return "1";
    case Example::Ex2:
      return "2";
    case Example::Custom:
      break;
  }
  return "custom";
}

std::string fixed4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

Matrix parse_csv(std::istream& in, const std::string& name, bool header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (header && row == 1) continue;
    if (trim(line).empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      const std::string t = trim(cell);
      if (t.empty()) throw ParseError(where(name, row, col) + ": empty field");
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(t.c_str(), &end);
      if (end != t.c_str() + t.size() || errno == ERANGE) {
        throw ParseError(where(name, row, col) + ": not a number: '" + t + "'");
      }
      if (!std::isfinite(v)) throw ParseError(where(name, row, col) + ": non-finite value");
      vals.push_back(v);
    }
    if (!line.empty() && trim(line).back() == ',') throw ParseError(where(name, row, col + 1) + ": empty field");
    if (width == 0) {
      width = vals.size();
    } else if (vals.size() != width) {
      throw ParseError(name + ": row " + std::to_string(row) + " has " + std::to_string(vals.size()) +
                       " columns, expected " + std::to_string(width));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError(name + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

Matrix read_csv(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_csv(in, path, header);
}

Dataset load_dataset(const std::string& x_path, const std::string& y_path, bool header, bool mean_intercept,
                     bool var_intercept) {
  Matrix x = read_csv(x_path, header);
  const Matrix ym = read_csv(y_path, header);
  Vector y;
  if (ym.cols() == 1) {
    y = ym.col(0);
  } else if (ym.rows() == 1) {
    y = ym.row(0).transpose();
  } else {
    throw DimensionError(y_path + ": response must be a single column");
  }
  if (y.size() != x.rows()) {
    throw DimensionError("row count mismatch: " + x_path + " has " + std::to_string(x.rows()) + ", " + y_path +
                         " has " + std::to_string(y.size()));
  }
  return Dataset(std::move(x), std::move(y), mean_intercept, var_intercept);
}

// ---------------------------------------------------------------------------
// FitResult <-> JSON

std::string fit_to_json(const FitResult& fit, const Dataset& d, int indent) {
  json j;
  j["penalty"] = to_string(fit.penalty_family);
  j["criterion"] = to_string(fit.criterion);
  j["n"] = d.n();
  j["p"] = d.p();
  j["mean_intercept"] = d.has_mean_intercept();
  j["var_intercept"] = d.has_var_intercept();
  j["beta"] = to_std(fit.params.beta);
  j["theta"] = to_std(fit.params.theta);
  j["support_beta"] = support(fit.params.beta, d.has_mean_intercept() ? 1 : 0);
  j["support_theta"] = support(fit.params.theta, d.has_var_intercept() ? 1 : 0);
  j["lambda_s"] = fit.lambda_s;
  j["lambda_t"] = fit.lambda_t;
  j["criterion_value"] = fit.criterion_value;
  j["df"] = fit.df;
  j["homoscedastic_fallback"] = fit.homoscedastic_fallback;
  j["converged"] = fit.converged;
  j["mm_violations"] = fit.mm_violations;
  j["objective_trace"] = fit.objective_trace;
  json stages = json::array();
  for (const auto& s : fit.stages) {
    stages.push_back({{"stage", s.stage},
                      {"sweep", s.sweep},
                      {"lambda", s.lambda},
                      {"criterion_value", s.criterion_value},
                      {"df", s.df},
                      {"grid_size", s.grid_size},
                      {"lla_iterations", s.lla_iterations},
                      {"inner_iterations", s.inner_iterations},
                      {"converged", s.converged},
                      {"objective_trace", s.objective_trace}});
  }
  j["stages"] = stages;
  json sweeps = json::array();
  for (const auto& s : fit.sweeps) {
    sweeps.push_back({{"beta", to_std(s.params.beta)},
                      {"theta", to_std(s.params.theta)},
                      {"lambda_s", s.lambda_s},
                      {"lambda_t", s.lambda_t},
                      {"criterion_value", s.criterion_value},
                      {"df", s.df}});
  }
  j["sweeps"] = sweeps;
  return j.dump(indent);
}

FitResult fit_from_json(const std::string& text) {
  FitResult f;
  try {
    const json j = json::parse(text);
    f.penalty_family = parse_penalty_family(j.at("penalty").get<std::string>());
    f.criterion = parse_criterion(j.at("criterion").get<std::string>());
    f.params.beta = from_std(j.at("beta").get<std::vector<double>>());
    f.params.theta = from_std(j.at("theta").get<std::vector<double>>());
    f.lambda_s = j.at("lambda_s").get<double>();
    f.lambda_t = j.at("lambda_t").get<double>();
    f.criterion_value = j.at("criterion_value").get<double>();
    f.df = j.at("df").get<int>();
    f.homoscedastic_fallback = j.at("homoscedastic_fallback").get<bool>();
    f.converged = j.at("converged").get<bool>();
    f.mm_violations = j.at("mm_violations").get<int>();
    f.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    for (const auto& s : j.at("stages")) {
      StageRecord r;
      r.stage = s.at("stage").get<std::string>();
      r.sweep = s.at("sweep").get<int>();
      r.lambda = s.at("lambda").get<double>();
      r.criterion_value = s.at("criterion_value").get<double>();
      r.df = s.at("df").get<int>();
      r.grid_size = s.at("grid_size").get<int>();
      r.lla_iterations = s.at("lla_iterations").get<int>();
      r.inner_iterations = s.at("inner_iterations").get<int>();
      r.converged = s.at("converged").get<bool>();
      r.objective_trace = s.at("objective_trace").get<std::vector<double>>();
      f.stages.push_back(std::move(r));
    }
    for (const auto& s : j.at("sweeps")) {
      SweepRecord r;
      r.params.beta = from_std(s.at("beta").get<std::vector<double>>());
      r.params.theta = from_std(s.at("theta").get<std::vector<double>>());
      r.lambda_s = s.at("lambda_s").get<double>();
      r.lambda_t = s.at("lambda_t").get<double>();
      r.criterion_value = s.at("criterion_value").get<double>();
      r.df = s.at("df").get<int>();
      f.sweeps.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("fit json: ") + e.what());
  }
  return f;
}

// ---------------------------------------------------------------------------
// Reports

std::string report_to_tsv(const SimulationReport& report) {
  std::ostringstream os;
  const bool theta_only = report.spec.example == Example::Ex1;
  auto pair = [&](const MetricSummary& m) { os << '\t' << fixed4(m.mean) << '\t' << fixed4(m.sd); };
  if (theta_only) {
    os << "estimator\tcount\ttheta_err\ttheta_err_sd\tpre_theta\tpre_theta_sd\trec_theta\trec_theta_sd\n";
  } else {
    os << "estimator\titeration\tcount\tbeta_err\tbeta_err_sd\tpre_beta\tpre_beta_sd\trec_beta\trec_beta_sd"
          "\ttheta_err\ttheta_err_sd\tpre_theta\tpre_theta_sd\trec_theta\trec_theta_sd\n";
  }
  for (const CellSummary& c : report.cells) {
    os << c.estimator;
    if (!theta_only) os << '\t' << c.iteration;
    os << '\t' << c.count;
    if (!theta_only) {
      pair(c.beta_error);
      pair(c.precision_beta);
      pair(c.recall_beta);
    }
    pair(c.theta_error);
    pair(c.precision_theta);
    pair(c.recall_theta);
    os << '\n';
  }
  return os.str();
}

std::string report_to_json(const SimulationReport& report, int indent) {
  const SimulationSpec& s = report.spec;
  json j;
  std::vector<std::string> names;
  for (const auto& e : s.estimators) names.push_back(e.name());
  j["spec"] = {{"example", example_name(s.example)}, {"n", s.n},     {"p", s.p},
               {"rho", s.rho},                       {"reps", s.reps}, {"master_seed", s.master_seed},
               {"estimators", names}};
  json cells = json::array();
  auto summary = [](const MetricSummary& m) { return json{{"mean", m.mean}, {"sd", m.sd}}; };
  for (const auto& c : report.cells) {
    cells.push_back({{"estimator", c.estimator},
                     {"iteration", c.iteration},
                     {"count", c.count},
                     {"beta_error", summary(c.beta_error)},
                     {"precision_beta", summary(c.precision_beta)},
                     {"recall_beta", summary(c.recall_beta)},
                     {"theta_error", summary(c.theta_error)},
                     {"precision_theta", summary(c.precision_theta)},
                     {"recall_theta", summary(c.recall_theta)}});
  }
  j["cells"] = cells;
  json recs = json::array();
  for (const auto& r : report.records) {
    recs.push_back({{"replicate", r.replicate},
                    {"estimator", r.estimator},
                    {"iteration", r.iteration},
                    {"beta_error", r.beta_error},
                    {"theta_error", r.theta_error},
                    {"precision_beta", r.precision_beta},
                    {"recall_beta", r.recall_beta},
                    {"precision_theta", r.precision_theta},
                    {"recall_theta", r.recall_theta},
                    {"support_beta", r.support_beta},
                    {"support_theta", r.support_theta},
                    {"mm_violations", r.mm_violations},
                    {"converged", r.converged},
                    {"fallback", r.fallback}});
  }
  j["records"] = recs;
  json fails = json::array();
  for (const auto& f : report.failures) {
    fails.push_back({{"replicate", f.replicate}, {"estimator", f.estimator}, {"message", f.message}});
  }
  j["failures"] = fails;
  j["failure_count"] = report.failures.size();
  j["mm_violations"] = report.mm_violations;
  return j.dump(indent);
}

std::string cv_to_tsv(const std::vector<CvRow>& rows) {
  std::ostringstream os;
  os << "method\tmse\tpartial_prediction_score\tmean_support_beta\tmean_support_theta\tfolds_used\tskipped\n";
  for (const auto& r : rows) {
    const CvMetrics& m = r.metrics;
    os << r.method << '\t' << fixed4(m.mse) << '\t' << fixed4(m.partial_prediction_score) << '\t'
       << fixed4(m.mean_support_beta) << '\t' << fixed4(m.mean_support_theta) << '\t' << m.folds_used << '\t'
       << m.skipped_folds.size() << '\n';
  }
  return os.str();
}

std::string diagnostics_to_text(const DiagnosticsReport& rep) {
  std::ostringstream os;
  os << "bin\tlower\tupper\tcount\tmean\tvariance\tmin\tq1\tmedian\tq3\tmax\n";
  for (std::size_t b = 0; b < rep.bins.size(); ++b) {
    const BinSummary& s = rep.bins[b];
    os << b << '\t' << fixed4(s.lower) << '\t' << fixed4(s.upper) << '\t' << s.count << '\t' << fixed4(s.mean)
       << '\t' << fixed4(s.variance) << '\t' << fixed4(s.min) << '\t' << fixed4(s.q1) << '\t' << fixed4(s.median)
       << '\t' << fixed4(s.q3) << '\t' << fixed4(s.max) << '\n';
  }
  os << "\nbin_a\tbin_b\tF\tdf_num\tdf_den\tp_value\n";
  for (const FTestResult& t : rep.tests) {
    os << t.bin_a << '\t' << t.bin_b << '\t' << fixed4(t.f) << '\t' << t.df_num << '\t' << t.df_den << '\t'
       << fixed4(t.p_value) << '\n';
  }
  for (const auto& w : rep.warnings) os << "warning: " << w << '\n';
  return os.str();
}

std::vector<double> quantile_breaks(const Vector& values, int bins) {
  if (bins < 2) throw Error("need at least two bins");
  if (values.size() < 2 * bins) throw Error("too few points for the requested bins");
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  std::vector<double> breaks{v.front()};
  for (int k = 1; k < bins; ++k) {
    const double q = quantile_sorted(v, static_cast<double>(k) / bins);
    if (q > breaks.back()) breaks.push_back(q);
  }
  breaks.push_back(std::nextafter(v.back(), std::numeric_limits<double>::infinity()));
  if (breaks.size() < 3) throw Error("fitted values are constant; cannot form bins");
  return breaks;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace hippo
