#include "zpl/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace zpl {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_histogram_csv(const std::string& path, const CoincidenceHistogram& hist,
                         const json& extra_meta) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_histogram_csv: cannot open " + path);
  std::fputs("tau_ps,counts\n", f);
  for (std::size_t i = 0; i < hist.n_bins(); ++i)
    std::fprintf(f, "%.1f,%llu\n", hist.bin_center_ps(i),
                 static_cast<unsigned long long>(hist.counts[i]));
  std::fclose(f);

  json meta = extra_meta;
  meta["bin_width_ps"] = hist.bin_width_ps;
  meta["tau_min_ps"] = hist.tau_min_ps;
  meta["tau_max_ps"] = hist.tau_max_ps;
  meta["n_starts"] = hist.n_starts;
  meta["mode"] = hist.mode == HistogramMode::StartStop ? "start_stop" : "full";
  std::ofstream os(path + ".meta.json");
  os << meta.dump(2) << "\n";
}

CoincidenceHistogram read_histogram_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_histogram_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);  // header
  std::vector<double> centers;
  std::vector<std::uint64_t> counts;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("read_histogram_csv: malformed row in " + path);
    centers.push_back(std::stod(line.substr(0, comma)));
    counts.push_back(std::stoull(line.substr(comma + 1)));
  }
  if (counts.size() < 2) throw std::runtime_error("read_histogram_csv: too few bins in " + path);

  CoincidenceHistogram hist;
  hist.counts = std::move(counts);

  std::ifstream ms(path + ".meta.json");
  if (ms) {
    json meta = json::parse(ms);
    hist.bin_width_ps = meta.at("bin_width_ps").get<std::int64_t>();
    hist.tau_min_ps = meta.at("tau_min_ps").get<std::int64_t>();
    hist.tau_max_ps = meta.at("tau_max_ps").get<std::int64_t>();
    hist.n_starts = meta.at("n_starts").get<std::uint64_t>();
    hist.mode = meta.at("mode") == "full" ? HistogramMode::Full : HistogramMode::StartStop;
  } else {
    const double width = centers[1] - centers[0];
    hist.bin_width_ps = static_cast<std::int64_t>(std::llround(width));
    hist.tau_min_ps = static_cast<std::int64_t>(std::llround(centers.front() - 0.5 * width));
    hist.tau_max_ps = static_cast<std::int64_t>(std::llround(centers.back() + 0.5 * width));
    hist.n_starts = 0;
    hist.mode = HistogramMode::StartStop;
  }
  return hist;
}

json fit_result_to_json(const FitResult& fit) {
  json j;
  j["params"] = fit.params;
  j["std_errors"] = fit.std_errors;
  j["chi2"] = fit.chi2;
  j["reduced_chi2"] = fit.reduced_chi2;
  j["n_iterations"] = fit.n_iterations;
  j["converged"] = fit.converged;
  return j;
}

FitResult fit_result_from_json(const json& j) {
  FitResult fit;
  fit.params = j.at("params").get<std::map<std::string, double>>();
  fit.std_errors = j.at("std_errors").get<std::map<std::string, double>>();
  fit.chi2 = j.at("chi2").get<double>();
  fit.reduced_chi2 = j.at("reduced_chi2").get<double>();
  fit.n_iterations = j.at("n_iterations").get<int>();
  fit.converged = j.at("converged").get<bool>();
  return fit;
}

std::string fit_result_text(const FitResult& fit) {
  std::ostringstream os;
  for (const auto& [name, value] : fit.params) {
    os << name << " = " << fmt_double(value);
    const auto it = fit.std_errors.find(name);
    if (it != fit.std_errors.end() && std::isfinite(it->second))
      os << " +- " << fmt_double(it->second);
    os << "\n";
  }
  os << "reduced_chi2 = " << fmt_double(fit.reduced_chi2) << "\n";
  os << "n_iterations = " << fit.n_iterations << "\n";
  os << "converged = " << (fit.converged ? "yes" : "no") << "\n";
  return os.str();
}

bool ComparisonTable::all_pass() const {
  for (const ComparisonRow& row : rows)
    if (!row.pass) return false;
  return true;
}

std::string ComparisonTable::text() const {
  std::ostringstream os;
  for (const ComparisonRow& row : rows) {
    os << (row.pass ? "[PASS] " : "[FAIL] ") << row.name;
    if (row.missing) {
      os << ": missing from report";
    } else {
      os << " = " << fmt_double(row.measured) << " expected [" << fmt_double(row.lo) << ", "
         << fmt_double(row.hi) << "] margin " << fmt_double(row.margin);
    }
    os << "\n";
  }
  return os.str();
}

ComparisonTable compare_report(const json& report, const json& expectations) {
  ComparisonTable table;
  const json metrics = report.value("metrics", json::object());
  const json params = report.contains("fit") ? report["fit"].value("params", json::object())
                                             : json::object();
  for (const auto& [name, spec] : expectations.items()) {
    ComparisonRow row;
    row.name = name;
    double lo, hi;
    if (spec.contains("center")) {
      const double c = spec.at("center").get<double>();
      const double tol = spec.at("tol").get<double>();
      lo = c - tol;
      hi = c + tol;
    } else {
      lo = spec.at("min").get<double>();
      hi = spec.at("max").get<double>();
    }
    row.lo = lo;
    row.hi = hi;
    if (metrics.contains(name)) {
      row.measured = metrics.at(name).get<double>();
    } else if (params.contains(name)) {
      row.measured = params.at(name).get<double>();
    } else {
      row.missing = true;
      row.pass = false;
      table.rows.push_back(row);
      continue;
    }
    row.margin = std::min(row.measured - lo, hi - row.measured);
    row.pass = row.margin >= 0.0;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace zpl
