#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hippo/evaluation.hpp"
#include "hippo/model.hpp"
#include "hippo/pipeline.hpp"
#include "hippo/simulation.hpp"

namespace hippo {

/// Raised for malformed input files; the message carries path, row and column.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Numeric comma-separated file. Rows are 1-based in messages and count the
/// header line when one is skipped.
Matrix read_csv(const std::string& path, bool header = false);
Matrix parse_csv(std::istream& in, const std::string& name, bool header = false);

/// X from one file and y from another (single column, or a single row).
Dataset load_dataset(const std::string& x_path, const std::string& y_path, bool header, bool mean_intercept,
                     bool var_intercept);

std::string fit_to_json(const FitResult& fit, const Dataset& d, int indent = 2);
FitResult fit_from_json(const std::string& text);

/// Table layout: Example 1 has one row per estimator with theta columns only;
/// other examples have one row per estimator and iteration with beta and theta
/// columns. Cells are "mean<TAB>sd" pairs in 4-decimal fixed point.
std::string report_to_tsv(const SimulationReport& report);
std::string report_to_json(const SimulationReport& report, int indent = 2);

struct CvRow {
  std::string method;
  CvMetrics metrics;
};
std::string cv_to_tsv(const std::vector<CvRow>& rows);

std::string diagnostics_to_text(const DiagnosticsReport& rep);

/// Breakpoints giving `bins` equal-count bins of `values` under half-open
/// intervals (the last edge sits just above the maximum).
std::vector<double> quantile_breaks(const Vector& values, int bins);

void write_file(const std::string& path, const std::string& content);

}  // namespace hippo
