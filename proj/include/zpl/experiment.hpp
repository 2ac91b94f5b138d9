#pragma once

#include <string>
#include <vector>

#include "zpl/detection.hpp"
#include "zpl/report.hpp"
#include "zpl/sil.hpp"

namespace zpl {

enum class ExperimentKind {
  CwG2,
  PulsedG2,
  SaturationSweep,
  ExcitationScan,
  ConfocalScan,
  Spectrum,
};

ExperimentKind kind_from_string(const std::string& s);
std::string kind_to_string(ExperimentKind kind);

/// Config rejected; carries one message per offending field.
struct ConfigError : std::runtime_error {
  std::vector<std::string> errors;
  explicit ConfigError(std::vector<std::string> errs);
};

struct CwG2Params {
  double power_mw = 0.84;  // s = P/P_sat = 0.24 for the default molecule
  double duration_s = 4.0;
  double signal_to_background = 9.6;  // 0 disables background
  std::int64_t bin_width_ps = 512;
  std::int64_t tau_max_ps = 100'000;
  bool zpl_filter = true;
  // Full correlation is the unbiased g2 estimator at desk-scale rates; the
  // start-stop mode mirrors the instrument but folds in the first-stop
  // survival factor, which tilts the tail once rate * tau_max is not small.
  bool use_full_correlation = true;
};

struct PulsedG2Params {
  double rep_rate_mhz = 16.0;
  double pulse_duration_ns = 3e-4;  // 300 fs
  double p_exc = 1.0;
  std::uint64_t n_pulses = 4'000'000;
  double signal_to_background = 7.553;  // rho^2 = 0.78
  std::int64_t bin_width_ps = 625;
  int periods_each_side = 5;
  int lateral_peaks = 4;
  bool allow_reexcitation = false;
  bool use_full_correlation = true;
  std::int64_t peak_window_ps = 0;  // 0 = one full period
};

struct SaturationParams {
  std::vector<double> s_values = {0.2, 0.5, 1.0, 2.0, 5.0};
  double s_inf_cps = 180'000.0;
  std::uint64_t target_counts_per_point = 1'000'000;
};

struct ExcitationScanParams {
  double fwhm0_mhz = 0.0;  // 0 = lifetime-limited width of the molecule
  double s = 0.05;
  double span_mhz = 300.0;
  int n_points = 61;
  double peak_counts = 20'000.0;
  double floor_counts = 100.0;
};

struct ConfocalScanParams {
  ScanGeometry geometry{2.0, 2.0, 50.0};
  double background_per_pixel = 20.0;
  double dwell_ms = 1.0;
  double peak_to_background = 10.0;
  std::vector<Emitter> emitters = {{1.0, 1.0, 0.0}};  // brightness 0 = derive
  bool fit_spot = true;
};

struct SpectrumParams {
  std::uint64_t n_photons = 300'000;
  double lambda_min_nm = 770.0;
  double lambda_max_nm = 840.0;
  double bin_nm = 0.25;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::CwG2;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  MoleculeModel molecule = MoleculeModel::dbt_defaults();
  DetectorModel detector{0.05, 0.0, 0.0, 0.0};
  SilSystem sil;
  CwG2Params cw_g2;
  PulsedG2Params pulsed_g2;
  SaturationParams saturation;
  ExcitationScanParams excitation_scan;
  ConfocalScanParams confocal_scan;
  SpectrumParams spectrum;

  /// Throws ConfigError listing every bad or missing field.
  static ExperimentConfig from_json(const json& j);
  json to_json() const;
  void validate() const;
};

struct ExperimentResult {
  std::string out_dir;
  std::vector<std::string> artifacts;  // file names relative to out_dir
  json report;                         // {"fit": ..., "metrics": ...}
  std::string manifest_path;
};

/// Run one experiment end to end and write every artifact plus a manifest
/// recording the config, its hash and the seed. Identical config and seed
/// produce byte-identical numeric outputs.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::vector<std::string> preset_names();
json preset_config(const std::string& name);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace zpl
