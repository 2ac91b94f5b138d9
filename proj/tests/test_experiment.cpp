#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "zpl/experiment.hpp"

using namespace zpl;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("experiment");

namespace {

std::string temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "zplsim_experiments" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config validation reports named fields") {
  json j = {{"kind", "cw_g2"}};
  try {
    ExperimentConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE_FALSE(e.errors.empty());
    CHECK(e.errors.front().find("seed") != std::string::npos);
  }

  j = {{"kind", "warp_drive"}, {"seed", 1}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

  // zero requested points is a validation error, not a crash
  j = {{"kind", "saturation_sweep"}, {"seed", 1},
       {"saturation", {{"s_values", json::array()}}}};
  try {
    ExperimentConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    bool found = false;
    for (const std::string& msg : e.errors)
      if (msg.find("s_values") != std::string::npos) found = true;
    CHECK(found);
  }

  j = {{"kind", "cw_g2"}, {"seed", 1}, {"cw_g2", {{"power_mw", "lots"}}}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
}

TEST_CASE("presets parse and validate") {
  for (const std::string& name : preset_names()) {
    const json j = preset_config(name);
    CHECK_NOTHROW(ExperimentConfig::from_json(j));
  }
  CHECK_THROWS_AS(preset_config("nonsense"), ConfigError);
}

TEST_CASE("compare_report ranges, margins and missing fields") {
  json report;
  report["fit"] = {{"params", {{"tau_f", 4.52}, {"dip", 0.70}}}};
  report["metrics"] = {{"ratio", 0.21}};

  json expectations;
  expectations["tau_f"] = {{"center", 4.5}, {"tol", 0.1}};
  const ComparisonTable pass_table = compare_report(report, expectations);
  REQUIRE(pass_table.rows.size() == 1);
  CHECK(pass_table.rows[0].pass);
  CHECK(pass_table.all_pass());

  expectations = json::object();
  expectations["dip"] = {{"center", 0.82}, {"tol", 0.03}};
  const ComparisonTable fail_table = compare_report(report, expectations);
  REQUIRE(fail_table.rows.size() == 1);
  CHECK_FALSE(fail_table.rows[0].pass);
  CHECK(fail_table.rows[0].margin == doctest::Approx(-0.09).epsilon(1e-12));

  // empty expectations: empty table, success
  const ComparisonTable empty_table = compare_report(report, json::object());
  CHECK(empty_table.rows.empty());
  CHECK(empty_table.all_pass());

  // missing quantity: explicit failing row, no crash
  expectations = json::object();
  expectations["linewidth"] = {{"min", 30.0}, {"max", 40.0}};
  const ComparisonTable missing_table = compare_report(report, expectations);
  REQUIRE(missing_table.rows.size() == 1);
  CHECK(missing_table.rows[0].missing);
  CHECK_FALSE(missing_table.all_pass());

  // metrics are preferred over fit params, ranges work as min/max
  expectations = json::object();
  expectations["ratio"] = {{"min", 0.19}, {"max", 0.25}};
  CHECK(compare_report(report, expectations).all_pass());
}

TEST_CASE("cw_g2 experiment at desk scale: artifacts and determinism") {
  json j = preset_config("cw_g2");
  j["seed"] = 902;
  j["cw_g2"]["duration_s"] = 0.08;
  j["out_dir"] = temp_dir("cw_a");
  const ExperimentConfig cfg = ExperimentConfig::from_json(j);
  const ExperimentResult res = run_experiment(cfg);

  for (const char* name : {"tags.zplt", "histogram.csv", "histogram.csv.meta.json", "report.json",
                           "report.txt", "manifest.json"}) {
    CAPTURE(name);
    CHECK(fs::exists(fs::path(res.out_dir) / name));
  }
  const json manifest = json::parse(slurp(fs::path(res.manifest_path)));
  CHECK(manifest.at("seed").get<std::uint64_t>() == 902);
  CHECK(manifest.at("kind") == "cw_g2");
  CHECK(manifest.contains("config_hash"));

  // loose physics sanity at this tiny scale
  const double dip = res.report["metrics"]["dip"].get<double>();
  CHECK(dip > 0.5);
  CHECK(dip <= 1.0);

  // byte-identical rerun with the same seed
  j["out_dir"] = temp_dir("cw_b");
  const ExperimentResult res2 = run_experiment(ExperimentConfig::from_json(j));
  CHECK(slurp(fs::path(res.out_dir) / "histogram.csv") ==
        slurp(fs::path(res2.out_dir) / "histogram.csv"));
  CHECK(slurp(fs::path(res.out_dir) / "report.json") ==
        slurp(fs::path(res2.out_dir) / "report.json"));

  // a different seed changes the data
  j["seed"] = 903;
  j["out_dir"] = temp_dir("cw_c");
  const ExperimentResult res3 = run_experiment(ExperimentConfig::from_json(j));
  CHECK(slurp(fs::path(res.out_dir) / "histogram.csv") !=
        slurp(fs::path(res3.out_dir) / "histogram.csv"));
}

TEST_CASE("spectrum experiment reproduces the ZPL branching") {
  json j = preset_config("spectrum");
  j["seed"] = 907;
  j["spectrum"]["n_photons"] = 100000;
  j["out_dir"] = temp_dir("spectrum");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  const double measured = res.report["metrics"]["zpl_fraction_measured"].get<double>();
  const double n = 100000.0;
  CHECK(std::abs(measured - 0.33) < 3.0 * std::sqrt(0.33 * 0.67 / n));
  CHECK(fs::exists(fs::path(res.out_dir) / "spectrum.csv"));
  CHECK(fs::exists(fs::path(res.out_dir) / "lines.csv"));
}

TEST_CASE("excitation scan experiment recovers the linewidth") {
  json j = preset_config("excitation_scan");
  j["seed"] = 911;
  j["out_dir"] = temp_dir("excitation");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  const double fwhm = res.report["metrics"]["fwhm"].get<double>();
  const double fwhm0 = res.report["metrics"]["fwhm0_mhz"].get<double>();
  CHECK(std::abs(fwhm - fwhm0) / fwhm0 < 0.05);
}

TEST_CASE("confocal experiment fits the spot") {
  json j = preset_config("confocal_scan");
  j["seed"] = 913;
  j["out_dir"] = temp_dir("confocal");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  CHECK(fs::exists(fs::path(res.out_dir) / "scan.txt"));
  CHECK(fs::exists(fs::path(res.out_dir) / "scan.pgm"));
  const double ratio = res.report["metrics"]["fwhm_vs_diffraction"].get<double>();
  CHECK(std::abs(ratio - 1.0) < 0.10);
}

TEST_CASE("saturation experiment at reduced scale") {
  json j = preset_config("saturation_sweep");
  j["seed"] = 917;
  j["saturation"]["target_counts_per_point"] = 20000;
  j["out_dir"] = temp_dir("saturation");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  CHECK(std::abs(res.report["fit"]["params"]["s_inf"].get<double>() - 180e3) / 180e3 < 0.05);
  CHECK(std::abs(res.report["fit"]["params"]["p_sat"].get<double>() - 3.5) / 3.5 < 0.05);
  CHECK(fs::exists(fs::path(res.out_dir) / "saturation.csv"));
}

TEST_CASE("histogram csv round trip") {
  json j = preset_config("cw_g2");
  j["seed"] = 919;
  j["cw_g2"]["duration_s"] = 0.06;
  j["out_dir"] = temp_dir("hist_roundtrip");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  const CoincidenceHistogram hist =
      read_histogram_csv((fs::path(res.out_dir) / "histogram.csv").string());
  CHECK(hist.bin_width_ps == 512);
  CHECK(hist.tau_min_ps == -100000);
  CHECK(hist.tau_max_ps == 100000);
  CHECK(hist.n_bins() > 100);
  CHECK(hist.total_counts() > 0);
}

TEST_SUITE_END();
