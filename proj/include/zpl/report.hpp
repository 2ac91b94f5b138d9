#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "zpl/correlator.hpp"
#include "zpl/fit.hpp"

namespace zpl {

using json = nlohmann::json;

/// Histogram CSV: header row, then one "tau_ps,counts" row per bin (tau is
/// the bin center). A JSON sidecar at <path>.meta.json carries bin width,
/// range, mode, n_starts and caller metadata such as seed lineage.
void write_histogram_csv(const std::string& path, const CoincidenceHistogram& hist,
                         const json& extra_meta = json::object());
CoincidenceHistogram read_histogram_csv(const std::string& path);

json fit_result_to_json(const FitResult& fit);
FitResult fit_result_from_json(const json& j);

/// "name = value +- sigma" lines plus convergence status.
std::string fit_result_text(const FitResult& fit);

struct ComparisonRow {
  std::string name;
  double measured = 0.0;
  double lo = 0.0, hi = 0.0;
  double margin = 0.0;  // distance inside the range; negative = outside
  bool pass = false;
  bool missing = false;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  bool all_pass() const;
  std::string text() const;
};

/// Compare a report (shape {"fit": {...}, "metrics": {...}}) against named
/// expectation ranges. Each expectation is either {"min":a,"max":b} or
/// {"center":c,"tol":t}. A name absent from the report becomes an explicit
/// failing row, not an error.
ComparisonTable compare_report(const json& report, const json& expectations);

}  // namespace zpl
