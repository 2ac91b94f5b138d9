#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "zpl/experiment.hpp"
#include "zpl/timetag.hpp"
#include "zpl/units.hpp"

namespace fs = std::filesystem;
using zpl::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitComparison = 3;

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return json::parse(is);
}

zpl::ExperimentConfig resolve_config(const std::string& config_path, const std::string& preset,
                                     long long seed_override, const std::string& out_override) {
  json j;
  if (!preset.empty())
    j = zpl::preset_config(preset);
  else if (!config_path.empty())
    j = load_json(config_path);
  else
    throw zpl::ConfigError({"config: pass --config PATH or --preset NAME"});
  if (seed_override >= 0) j["seed"] = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) j["out_dir"] = out_override;
  return zpl::ExperimentConfig::from_json(j);
}

int run_from_config(const std::string& config_path, const std::string& preset,
                    long long seed_override, const std::string& out_override) {
  const zpl::ExperimentConfig cfg =
      resolve_config(config_path, preset, seed_override, out_override);
  const zpl::ExperimentResult result = zpl::run_experiment(cfg);
  std::printf("wrote %zu artifacts to %s\n", result.artifacts.size(), result.out_dir.c_str());
  for (const std::string& name : result.artifacts) std::printf("  %s\n", name.c_str());
  return 0;
}

int cmd_correlate(const std::string& input, const std::string& out, const std::string& mode,
                  std::int64_t bin_width_ps, std::int64_t tau_max_ps) {
  const zpl::TagFile file = zpl::read_tag_file(input);
  const auto streams = zpl::streams_from_tag_file(file);
  if (streams.size() < 2)
    throw std::runtime_error("correlate: tag file must contain two channels");
  zpl::CoincidenceHistogram hist;
  if (mode == "start_stop")
    hist = zpl::symmetric_start_stop_histogram(streams[0], streams[1], bin_width_ps, tau_max_ps);
  else if (mode == "full")
    hist = zpl::full_correlation_histogram(streams[0], streams[1], bin_width_ps, -tau_max_ps,
                                           tau_max_ps);
  else
    throw zpl::ConfigError({"mode: must be start_stop or full"});
  json meta = {{"source", input}, {"mode", mode}};
  zpl::write_histogram_csv(out, hist, meta);
  std::printf("wrote %s (%zu bins, %llu counts)\n", out.c_str(), hist.n_bins(),
              static_cast<unsigned long long>(hist.total_counts()));
  return 0;
}

int cmd_fit(const std::string& model, const std::string& input, const std::string& out,
            double known_s, double rep_period_ns, double pixel_size_nm) {
  zpl::FitResult fit;
  if (model == "antibunching") {
    fit = zpl::fit_antibunching(zpl::read_histogram_csv(input), known_s);
  } else if (model == "saturation" || model == "lorentzian") {
    std::ifstream is(input);
    if (!is) throw std::runtime_error("cannot open " + input);
    std::string line;
    std::getline(is, line);  // header
    std::vector<zpl::SaturationPoint> sat;
    std::vector<zpl::ScanPoint> scan;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      double a, b, c;
      if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
        throw std::runtime_error("fit: malformed CSV row: " + line);
      sat.push_back({a, b, c});
      scan.push_back({a, b, c});
    }
    fit = model == "saturation" ? zpl::fit_saturation(sat) : zpl::fit_lorentzian(scan);
  } else if (model == "peak_decay") {
    const zpl::CoincidenceHistogram hist = zpl::read_histogram_csv(input);
    const auto period_ps = zpl::ns_to_ps(rep_period_ns);
    const zpl::PeakTable peaks = zpl::peak_areas(hist, period_ps, period_ps);
    fit = zpl::fit_lateral_peak_decay(peaks, hist, period_ps);
  } else if (model == "gaussian_spot") {
    std::ifstream is(input);
    if (!is) throw std::runtime_error("cannot open " + input);
    zpl::ScanImage img;
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::uint64_t v;
      std::size_t nx = 0;
      while (row >> v) {
        img.pixels.push_back(v);
        ++nx;
      }
      if (img.nx == 0) img.nx = nx;
      ++img.ny;
    }
    img.pixel_size_nm = pixel_size_nm;
    fit = zpl::fit_gaussian_spot(img, pixel_size_nm);
  } else {
    throw zpl::ConfigError(
        {"model: must be one of saturation, antibunching, lorentzian, peak_decay, gaussian_spot"});
  }

  const std::string text = zpl::fit_result_text(fit);
  std::fputs(text.c_str(), stdout);
  if (!out.empty()) {
    json report = {{"fit", zpl::fit_result_to_json(fit)}};
    std::ofstream os(out);
    os << report.dump(2) << "\n";
  }
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& expect_path) {
  const json report = load_json(report_path);
  const json expectations = load_json(expect_path);
  const zpl::ComparisonTable table = zpl::compare_report(report, expectations);
  std::fputs(table.text().c_str(), stdout);
  return table.all_pass() ? 0 : kExitComparison;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zplsim: single-molecule single-photon source simulator and analysis toolkit"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir;
  long long seed_override = -1;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON");
    cmd->add_option("--preset", preset, "built-in preset name");
    cmd->add_option("--seed", seed_override, "override the config seed");
    cmd->add_option("--out", out_dir, "override the output directory");
  };

  CLI::App* simulate = app.add_subcommand(
      "simulate", "run a simulation experiment from a config (cw_g2, pulsed_g2, "
                  "saturation_sweep, excitation_scan, spectrum)");
  add_config_flags(simulate);

  CLI::App* scan = app.add_subcommand("scan", "run a confocal_scan experiment from a config");
  add_config_flags(scan);

  CLI::App* correlate = app.add_subcommand("correlate", "histogram a two-channel .zplt tag file");
  std::string corr_input, corr_out = "histogram.csv", corr_mode = "start_stop";
  std::int64_t corr_bin = 512, corr_tau_max = 100000;
  correlate->add_option("--input", corr_input, "input .zplt file")->required();
  correlate->add_option("--out", corr_out, "output histogram CSV");
  correlate->add_option("--mode", corr_mode, "start_stop or full");
  correlate->add_option("--bin-width-ps", corr_bin, "bin width in ps");
  correlate->add_option("--tau-max-ps", corr_tau_max, "max delay in ps");

  CLI::App* fit = app.add_subcommand("fit", "fit a curve model to a CSV artifact");
  std::string fit_model, fit_input, fit_out;
  double fit_s = 0.0, fit_rep_ns = 62.5, fit_pixel_nm = 50.0;
  fit->add_option("--model", fit_model,
                  "saturation | antibunching | lorentzian | peak_decay | gaussian_spot")
      ->required();
  fit->add_option("--input", fit_input, "input CSV (points, histogram, or scan matrix)")
      ->required();
  fit->add_option("--out", fit_out, "write the fit report JSON here");
  fit->add_option("--s", fit_s, "known saturation parameter P/P_sat (antibunching)");
  fit->add_option("--rep-period-ns", fit_rep_ns, "pulse period in ns (peak_decay)");
  fit->add_option("--pixel-size-nm", fit_pixel_nm, "pixel size in nm (gaussian_spot)");

  CLI::App* report = app.add_subcommand("report", "compare a fit report against expectations");
  std::string report_path, expect_path;
  report->add_option("--report", report_path, "report JSON produced by simulate/fit")->required();
  report->add_option("--expect", expect_path, "expectation ranges JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (simulate->parsed()) return run_from_config(config_path, preset, seed_override, out_dir);
    if (scan->parsed()) return run_from_config(config_path, preset, seed_override, out_dir);
    if (correlate->parsed())
      return cmd_correlate(corr_input, corr_out, corr_mode, corr_bin, corr_tau_max);
    if (fit->parsed()) return cmd_fit(fit_model, fit_input, fit_out, fit_s, fit_rep_ns, fit_pixel_nm);
    if (report->parsed()) return cmd_report(report_path, expect_path);
  } catch (const zpl::ConfigError& e) {
    std::fprintf(stderr, "config error:\n");
    for (const std::string& msg : e.errors) std::fprintf(stderr, "  %s\n", msg.c_str());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
