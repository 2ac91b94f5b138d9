#include "zpl/experiment.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "zpl/correlator.hpp"
#include "zpl/random.hpp"
#include "zpl/timetag.hpp"
#include "zpl/units.hpp"

namespace zpl {

namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Stage indices for derived sub-seeds; fixed so runs are reproducible.
enum Stage : std::uint64_t {
  kStageEmission = 1,
  kStageBackground = 2,
  kStageDetector = 3,
  kStageBeamsplit = 4,
  kStageScan = 5,
};

struct FieldReader {
  const json& j;
  std::string prefix;
  std::vector<std::string>& errors;

  bool has(const char* key) const { return j.is_object() && j.contains(key); }

  template <typename T>
  T get(const char* key, T fallback, bool required = false) const {
    if (!has(key)) {
      if (required) errors.push_back(prefix + key + ": missing required field");
      return fallback;
    }
    try {
      return j.at(key).get<T>();
    } catch (const json::exception&) {
      errors.push_back(prefix + key + ": wrong type");
      return fallback;
    }
  }

  FieldReader sub(const char* key) const {
    static const json empty = json::object();
    const json& child = has(key) && j.at(key).is_object() ? j.at(key) : empty;
    if (has(key) && !j.at(key).is_object()) errors.push_back(prefix + key + ": must be an object");
    return FieldReader{child, prefix + key + ".", errors};
  }
};

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << content;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_points_csv(const fs::path& path, const char* header,
                      const std::vector<std::array<double, 3>>& rows) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::fprintf(f, "%s\n", header);
  for (const auto& row : rows) std::fprintf(f, "%.17g,%.17g,%.17g\n", row[0], row[1], row[2]);
  std::fclose(f);
}

json molecule_to_json(const MoleculeModel& m) {
  json lines = json::array();
  for (const SpectralLine& ln : m.lines)
    lines.push_back({{"center_nm", ln.center_nm}, {"weight", ln.weight}, {"fwhm_ghz", ln.fwhm_ghz}});
  return {{"tau_f_ns", m.tau_f_ns},
          {"p_sat_mw", m.p_sat_mw},
          {"zpl_fraction", m.zpl_fraction},
          {"isc_yield", m.isc_yield},
          {"vibronic_relax_ps", m.vibronic_relax_ps},
          {"lines", lines}};
}

MoleculeModel molecule_from_json(const FieldReader& r) {
  MoleculeModel m = MoleculeModel::dbt_defaults();
  m.tau_f_ns = r.get<double>("tau_f_ns", m.tau_f_ns);
  m.p_sat_mw = r.get<double>("p_sat_mw", m.p_sat_mw);
  m.zpl_fraction = r.get<double>("zpl_fraction", m.zpl_fraction);
  m.isc_yield = r.get<double>("isc_yield", m.isc_yield);
  m.vibronic_relax_ps = r.get<double>("vibronic_relax_ps", m.vibronic_relax_ps);
  if (r.has("lines")) {
    m.lines.clear();
    try {
      for (const json& lj : r.j.at("lines")) {
        SpectralLine ln;
        ln.center_nm = lj.at("center_nm").get<double>();
        ln.weight = lj.at("weight").get<double>();
        ln.fwhm_ghz = lj.at("fwhm_ghz").get<double>();
        m.lines.push_back(ln);
      }
    } catch (const json::exception&) {
      r.errors.push_back(r.prefix + "lines: malformed line entry");
    }
  }
  return m;
}

}  // namespace

ExperimentKind kind_from_string(const std::string& s) {
  if (s == "cw_g2") return ExperimentKind::CwG2;
  if (s == "pulsed_g2") return ExperimentKind::PulsedG2;
  if (s == "saturation_sweep") return ExperimentKind::SaturationSweep;
  if (s == "excitation_scan") return ExperimentKind::ExcitationScan;
  if (s == "confocal_scan") return ExperimentKind::ConfocalScan;
  if (s == "spectrum") return ExperimentKind::Spectrum;
  throw ConfigError({"kind: unknown experiment kind '" + s + "'"});
}

std::string kind_to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::CwG2: return "cw_g2";
    case ExperimentKind::PulsedG2: return "pulsed_g2";
    case ExperimentKind::SaturationSweep: return "saturation_sweep";
    case ExperimentKind::ExcitationScan: return "excitation_scan";
    case ExperimentKind::ConfocalScan: return "confocal_scan";
    case ExperimentKind::Spectrum: return "spectrum";
  }
  return "unknown";
}

ConfigError::ConfigError(std::vector<std::string> errs)
    : std::runtime_error(errs.empty() ? "invalid config"
                                      : "invalid config: " + errs.front() +
                                            (errs.size() > 1 ? " (+" + std::to_string(errs.size() - 1) +
                                                                   " more)"
                                                             : "")),
      errors(std::move(errs)) {}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  std::vector<std::string> errors;
  FieldReader root{j, "", errors};

  ExperimentConfig cfg;
  const std::string kind_str = root.get<std::string>("kind", "", true);
  if (!kind_str.empty()) {
    try {
      cfg.kind = kind_from_string(kind_str);
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.errors.begin(), e.errors.end());
    }
  }
  if (!root.has("seed"))
    errors.push_back("seed: missing required field (wall-clock seeding is not supported)");
  cfg.seed = root.get<std::uint64_t>("seed", 0);
  cfg.out_dir = root.get<std::string>("out_dir", cfg.out_dir);

  cfg.molecule = molecule_from_json(root.sub("molecule"));

  {
    FieldReader r = root.sub("detector");
    cfg.detector.efficiency = r.get<double>("efficiency", cfg.detector.efficiency);
    cfg.detector.dead_time_ns = r.get<double>("dead_time_ns", cfg.detector.dead_time_ns);
    cfg.detector.jitter_sigma_ps = r.get<double>("jitter_sigma_ps", cfg.detector.jitter_sigma_ps);
    cfg.detector.dark_rate_cps = r.get<double>("dark_rate_cps", cfg.detector.dark_rate_cps);
  }
  {
    FieldReader r = root.sub("sil");
    cfg.sil.n_sil = r.get<double>("n_sil", cfg.sil.n_sil);
    cfg.sil.diameter_mm = r.get<double>("diameter_mm", cfg.sil.diameter_mm);
    cfg.sil.lens_na = r.get<double>("lens_na", cfg.sil.lens_na);
    cfg.sil.lens_focal_mm = r.get<double>("lens_focal_mm", cfg.sil.lens_focal_mm);
    cfg.sil.wavelength_nm = r.get<double>("wavelength_nm", cfg.sil.wavelength_nm);
  }
  {
    FieldReader r = root.sub("cw_g2");
    auto& p = cfg.cw_g2;
    p.power_mw = r.get<double>("power_mw", p.power_mw);
    p.duration_s = r.get<double>("duration_s", p.duration_s);
    p.signal_to_background = r.get<double>("signal_to_background", p.signal_to_background);
    p.bin_width_ps = r.get<std::int64_t>("bin_width_ps", p.bin_width_ps);
    p.tau_max_ps = r.get<std::int64_t>("tau_max_ps", p.tau_max_ps);
    p.zpl_filter = r.get<bool>("zpl_filter", p.zpl_filter);
  }
  {
    FieldReader r = root.sub("pulsed_g2");
    auto& p = cfg.pulsed_g2;
    p.rep_rate_mhz = r.get<double>("rep_rate_mhz", p.rep_rate_mhz);
    p.pulse_duration_ns = r.get<double>("pulse_duration_ns", p.pulse_duration_ns);
    p.p_exc = r.get<double>("p_exc", p.p_exc);
    p.n_pulses = r.get<std::uint64_t>("n_pulses", p.n_pulses);
    p.signal_to_background = r.get<double>("signal_to_background", p.signal_to_background);
    p.bin_width_ps = r.get<std::int64_t>("bin_width_ps", p.bin_width_ps);
    p.periods_each_side = r.get<int>("periods_each_side", p.periods_each_side);
    p.lateral_peaks = r.get<int>("lateral_peaks", p.lateral_peaks);
    p.allow_reexcitation = r.get<bool>("allow_reexcitation", p.allow_reexcitation);
    p.use_full_correlation = r.get<bool>("use_full_correlation", p.use_full_correlation);
    p.peak_window_ps = r.get<std::int64_t>("peak_window_ps", p.peak_window_ps);
  }
  {
    FieldReader r = root.sub("saturation");
    auto& p = cfg.saturation;
    p.s_values = r.get<std::vector<double>>("s_values", p.s_values);
    p.s_inf_cps = r.get<double>("s_inf_cps", p.s_inf_cps);
    p.target_counts_per_point =
        r.get<std::uint64_t>("target_counts_per_point", p.target_counts_per_point);
  }
  {
    FieldReader r = root.sub("excitation_scan");
    auto& p = cfg.excitation_scan;
    p.fwhm0_mhz = r.get<double>("fwhm0_mhz", p.fwhm0_mhz);
    p.s = r.get<double>("s", p.s);
    p.span_mhz = r.get<double>("span_mhz", p.span_mhz);
    p.n_points = r.get<int>("n_points", p.n_points);
    p.peak_counts = r.get<double>("peak_counts", p.peak_counts);
    p.floor_counts = r.get<double>("floor_counts", p.floor_counts);
  }
  {
    FieldReader r = root.sub("confocal_scan");
    auto& p = cfg.confocal_scan;
    p.geometry.extent_x_um = r.get<double>("extent_x_um", p.geometry.extent_x_um);
    p.geometry.extent_y_um = r.get<double>("extent_y_um", p.geometry.extent_y_um);
    p.geometry.pixel_size_nm = r.get<double>("pixel_size_nm", p.geometry.pixel_size_nm);
    p.background_per_pixel = r.get<double>("background_per_pixel", p.background_per_pixel);
    p.dwell_ms = r.get<double>("dwell_ms", p.dwell_ms);
    p.peak_to_background = r.get<double>("peak_to_background", p.peak_to_background);
    p.fit_spot = r.get<bool>("fit_spot", p.fit_spot);
    if (r.has("emitters")) {
      p.emitters.clear();
      try {
        for (const json& ej : r.j.at("emitters"))
          p.emitters.push_back(
              {ej.at("x_um").get<double>(), ej.at("y_um").get<double>(), ej.value("brightness", 0.0)});
      } catch (const json::exception&) {
        errors.push_back("confocal_scan.emitters: malformed emitter entry");
      }
    }
  }
  {
    FieldReader r = root.sub("spectrum");
    auto& p = cfg.spectrum;
    p.n_photons = r.get<std::uint64_t>("n_photons", p.n_photons);
    p.lambda_min_nm = r.get<double>("lambda_min_nm", p.lambda_min_nm);
    p.lambda_max_nm = r.get<double>("lambda_max_nm", p.lambda_max_nm);
    p.bin_nm = r.get<double>("bin_nm", p.bin_nm);
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  cfg.validate();
  return cfg;
}

json ExperimentConfig::to_json() const {
  json j;
  j["kind"] = kind_to_string(kind);
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["molecule"] = molecule_to_json(molecule);
  j["detector"] = {{"efficiency", detector.efficiency},
                   {"dead_time_ns", detector.dead_time_ns},
                   {"jitter_sigma_ps", detector.jitter_sigma_ps},
                   {"dark_rate_cps", detector.dark_rate_cps}};
  j["sil"] = {{"n_sil", sil.n_sil},
              {"diameter_mm", sil.diameter_mm},
              {"lens_na", sil.lens_na},
              {"lens_focal_mm", sil.lens_focal_mm},
              {"wavelength_nm", sil.wavelength_nm}};
  switch (kind) {
    case ExperimentKind::CwG2:
      j["cw_g2"] = {{"power_mw", cw_g2.power_mw},
                    {"duration_s", cw_g2.duration_s},
                    {"signal_to_background", cw_g2.signal_to_background},
                    {"bin_width_ps", cw_g2.bin_width_ps},
                    {"tau_max_ps", cw_g2.tau_max_ps},
                    {"zpl_filter", cw_g2.zpl_filter}};
      break;
    case ExperimentKind::PulsedG2:
      j["pulsed_g2"] = {{"rep_rate_mhz", pulsed_g2.rep_rate_mhz},
                        {"pulse_duration_ns", pulsed_g2.pulse_duration_ns},
                        {"p_exc", pulsed_g2.p_exc},
                        {"n_pulses", pulsed_g2.n_pulses},
                        {"signal_to_background", pulsed_g2.signal_to_background},
                        {"bin_width_ps", pulsed_g2.bin_width_ps},
                        {"periods_each_side", pulsed_g2.periods_each_side},
                        {"lateral_peaks", pulsed_g2.lateral_peaks},
                        {"allow_reexcitation", pulsed_g2.allow_reexcitation},
                        {"use_full_correlation", pulsed_g2.use_full_correlation},
                        {"peak_window_ps", pulsed_g2.peak_window_ps}};
      break;
    case ExperimentKind::SaturationSweep:
      j["saturation"] = {{"s_values", saturation.s_values},
                         {"s_inf_cps", saturation.s_inf_cps},
                         {"target_counts_per_point", saturation.target_counts_per_point}};
      break;
    case ExperimentKind::ExcitationScan:
      j["excitation_scan"] = {{"fwhm0_mhz", excitation_scan.fwhm0_mhz},
                              {"s", excitation_scan.s},
                              {"span_mhz", excitation_scan.span_mhz},
                              {"n_points", excitation_scan.n_points},
                              {"peak_counts", excitation_scan.peak_counts},
                              {"floor_counts", excitation_scan.floor_counts}};
      break;
    case ExperimentKind::ConfocalScan: {
      json emitters = json::array();
      for (const Emitter& e : confocal_scan.emitters)
        emitters.push_back({{"x_um", e.x_um}, {"y_um", e.y_um}, {"brightness", e.brightness}});
      j["confocal_scan"] = {{"extent_x_um", confocal_scan.geometry.extent_x_um},
                            {"extent_y_um", confocal_scan.geometry.extent_y_um},
                            {"pixel_size_nm", confocal_scan.geometry.pixel_size_nm},
                            {"background_per_pixel", confocal_scan.background_per_pixel},
                            {"dwell_ms", confocal_scan.dwell_ms},
                            {"peak_to_background", confocal_scan.peak_to_background},
                            {"fit_spot", confocal_scan.fit_spot},
                            {"emitters", emitters}};
      break;
    }
    case ExperimentKind::Spectrum:
      j["spectrum"] = {{"n_photons", spectrum.n_photons},
                       {"lambda_min_nm", spectrum.lambda_min_nm},
                       {"lambda_max_nm", spectrum.lambda_max_nm},
                       {"bin_nm", spectrum.bin_nm}};
      break;
  }
  return j;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  const auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };

  try {
    molecule.validate();
  } catch (const std::invalid_argument& e) {
    errors.emplace_back(e.what());
  }
  try {
    detector.validate();
  } catch (const std::invalid_argument& e) {
    errors.emplace_back(e.what());
  }
  try {
    sil.validate();
  } catch (const std::invalid_argument& e) {
    errors.emplace_back(e.what());
  }

  switch (kind) {
    case ExperimentKind::CwG2:
      check(cw_g2.power_mw > 0.0, "cw_g2.power_mw: must be > 0");
      check(cw_g2.duration_s > 0.0, "cw_g2.duration_s: must be > 0");
      check(cw_g2.signal_to_background >= 0.0, "cw_g2.signal_to_background: must be >= 0");
      check(cw_g2.bin_width_ps >= 1, "cw_g2.bin_width_ps: must be >= 1");
      check(cw_g2.tau_max_ps > cw_g2.bin_width_ps, "cw_g2.tau_max_ps: must exceed one bin");
      check(detector.efficiency > 0.0, "detector.efficiency: must be > 0 for cw_g2");
      break;
    case ExperimentKind::PulsedG2:
      check(pulsed_g2.rep_rate_mhz > 0.0, "pulsed_g2.rep_rate_mhz: must be > 0");
      check(pulsed_g2.pulse_duration_ns > 0.0, "pulsed_g2.pulse_duration_ns: must be > 0");
      check(pulsed_g2.pulse_duration_ns < 1e3 / pulsed_g2.rep_rate_mhz,
            "pulsed_g2.pulse_duration_ns: must be shorter than the period");
      check(pulsed_g2.p_exc > 0.0 && pulsed_g2.p_exc <= 1.0, "pulsed_g2.p_exc: must be in (0,1]");
      check(pulsed_g2.n_pulses > 0, "pulsed_g2.n_pulses: must be > 0");
      check(pulsed_g2.signal_to_background >= 0.0,
            "pulsed_g2.signal_to_background: must be >= 0");
      check(pulsed_g2.bin_width_ps >= 1, "pulsed_g2.bin_width_ps: must be >= 1");
      check(pulsed_g2.periods_each_side >= 2, "pulsed_g2.periods_each_side: must be >= 2");
      check(pulsed_g2.lateral_peaks >= 1, "pulsed_g2.lateral_peaks: must be >= 1");
      check(detector.efficiency > 0.0, "detector.efficiency: must be > 0 for pulsed_g2");
      break;
    case ExperimentKind::SaturationSweep: {
      check(!saturation.s_values.empty(), "saturation.s_values: must not be empty");
      for (double s : saturation.s_values)
        check(s > 0.0, "saturation.s_values: every value must be > 0");
      check(saturation.s_inf_cps > 0.0, "saturation.s_inf_cps: must be > 0");
      check(saturation.target_counts_per_point >= 100,
            "saturation.target_counts_per_point: must be >= 100");
      const double eta = saturation.s_inf_cps * molecule.tau_f_ns * 1e-9;
      check(eta <= 1.0, "saturation.s_inf_cps: implies a detection probability above 1");
      break;
    }
    case ExperimentKind::ExcitationScan:
      check(excitation_scan.fwhm0_mhz >= 0.0, "excitation_scan.fwhm0_mhz: must be >= 0");
      check(excitation_scan.s >= 0.0, "excitation_scan.s: must be >= 0");
      check(excitation_scan.span_mhz > 0.0, "excitation_scan.span_mhz: must be > 0");
      check(excitation_scan.n_points >= 5, "excitation_scan.n_points: must be >= 5");
      check(excitation_scan.peak_counts > 0.0, "excitation_scan.peak_counts: must be > 0");
      check(excitation_scan.floor_counts >= 0.0, "excitation_scan.floor_counts: must be >= 0");
      break;
    case ExperimentKind::ConfocalScan:
      try {
        confocal_scan.geometry.validate();
      } catch (const std::invalid_argument& e) {
        errors.emplace_back(e.what());
      }
      check(confocal_scan.background_per_pixel >= 0.0,
            "confocal_scan.background_per_pixel: must be >= 0");
      check(confocal_scan.dwell_ms > 0.0, "confocal_scan.dwell_ms: must be > 0");
      check(!confocal_scan.emitters.empty(), "confocal_scan.emitters: must not be empty");
      check(confocal_scan.peak_to_background > 0.0 || confocal_scan.background_per_pixel == 0.0,
            "confocal_scan.peak_to_background: must be > 0 when background is present");
      break;
    case ExperimentKind::Spectrum:
      check(spectrum.n_photons >= 1000, "spectrum.n_photons: must be >= 1000");
      check(spectrum.lambda_max_nm > spectrum.lambda_min_nm,
            "spectrum.lambda_max_nm: must exceed lambda_min_nm");
      check(spectrum.bin_nm > 0.0, "spectrum.bin_nm: must be > 0");
      break;
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string hash_hex(const json& j) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

struct Run {
  const ExperimentConfig& cfg;
  fs::path dir;
  ExperimentResult result;

  void add(const std::string& name) { result.artifacts.push_back(name); }

  void save_tags(const std::string& name, const PhotonStream& a, const PhotonStream& b) {
    TagFile file = tag_file_from_streams({&a, &b}, 1);
    write_tag_file((dir / name).string(), file);
    add(name);
  }

  void save_hist(const std::string& name, const CoincidenceHistogram& hist) {
    json meta;
    meta["seed"] = cfg.seed;
    meta["kind"] = kind_to_string(cfg.kind);
    write_histogram_csv((dir / name).string(), hist, meta);
    add(name);
    add(name + ".meta.json");
  }

  void finish() {
    write_json(dir / "report.json", result.report);
    add("report.json");
    if (result.report.contains("fit")) {
      write_text(dir / "report.txt", fit_result_text(fit_result_from_json(result.report["fit"])));
      add("report.txt");
    }
    json manifest;
    manifest["tool"] = "zplsim";
    manifest["version"] = kToolVersion;
    manifest["kind"] = kind_to_string(cfg.kind);
    manifest["seed"] = cfg.seed;
    const json echo = cfg.to_json();
    manifest["config"] = echo;
    manifest["config_hash"] = hash_hex(echo);
    manifest["artifacts"] = result.artifacts;
    const fs::path mpath = dir / "manifest.json";
    write_json(mpath, manifest);
    result.manifest_path = mpath.string();
  }
};

void run_cw_g2(Run& run) {
  const ExperimentConfig& cfg = run.cfg;
  const auto& p = cfg.cw_g2;
  const double s = p.power_mw / cfg.molecule.p_sat_mw;

  SimConfig sim_cfg{Rng::derive(cfg.seed, kStageEmission), p.duration_s, 1};
  std::vector<double> line_keep(cfg.molecule.lines.size(), cfg.detector.efficiency);
  if (p.zpl_filter)
    for (std::size_t i = 1; i < line_keep.size(); ++i) line_keep[i] = 0.0;
  PhotonStream signal = simulate_cw_detected(cfg.molecule, p.power_mw, line_keep, sim_cfg);
  const double signal_rate = signal.rate_cps();

  PhotonStream merged = signal;
  double bg_rate = 0.0;
  if (p.signal_to_background > 0.0) {
    bg_rate = signal_rate / p.signal_to_background;
    SimConfig bg_cfg{Rng::derive(cfg.seed, kStageBackground), p.duration_s, 1};
    merged = add_background(signal, bg_rate, bg_cfg);
  }
  if (cfg.detector.dead_time_ns > 0.0 || cfg.detector.jitter_sigma_ps > 0.0 ||
      cfg.detector.dark_rate_cps > 0.0) {
    DetectorModel post = cfg.detector;
    post.efficiency = 1.0;  // efficiency already folded into the thinned emission
    SimConfig det_cfg{Rng::derive(cfg.seed, kStageDetector), p.duration_s, 1};
    merged = apply_detector(merged, post, det_cfg);
  }

  auto [ch_a, ch_b] = beamsplit(merged, 0.5, Rng::derive(cfg.seed, kStageBeamsplit));
  run.save_tags("tags.zplt", ch_a, ch_b);

  CoincidenceHistogram hist =
      symmetric_start_stop_histogram(ch_a, ch_b, p.bin_width_ps, p.tau_max_ps);
  run.save_hist("histogram.csv", hist);

  const FitResult fit = fit_antibunching(hist, s);
  run.result.report["fit"] = fit_result_to_json(fit);
  run.result.report["metrics"] = {
      {"s", s},
      {"signal_rate_cps", signal_rate},
      {"background_rate_cps", bg_rate},
      {"detected_photons", merged.size()},
      {"dip", fit.params.at("dip")},
      {"tau_f", fit.params.at("tau_f")},
  };
}

void run_pulsed_g2(Run& run) {
  const ExperimentConfig& cfg = run.cfg;
  const auto& p = cfg.pulsed_g2;

  PulseTrain train{p.rep_rate_mhz, p.pulse_duration_ns, p.p_exc, p.n_pulses};
  SimConfig sim_cfg{Rng::derive(cfg.seed, kStageEmission), 1.0, 1};
  PulsedResult sim = simulate_pulsed(cfg.molecule, train, sim_cfg, p.allow_reexcitation);
  const double duration_s = static_cast<double>(sim.stream.duration_ps) / kPsPerS;

  SimConfig det_cfg{Rng::derive(cfg.seed, kStageDetector), duration_s, 1};
  PhotonStream detected = apply_detector(sim.stream, cfg.detector, det_cfg);
  const double signal_rate = detected.rate_cps();

  PhotonStream merged = detected;
  double bg_rate = 0.0;
  if (p.signal_to_background > 0.0) {
    bg_rate = signal_rate / p.signal_to_background;
    SimConfig bg_cfg{Rng::derive(cfg.seed, kStageBackground), duration_s, 1};
    merged = add_background(detected, bg_rate, bg_cfg);
  }

  auto [ch_a, ch_b] = beamsplit(merged, 0.5, Rng::derive(cfg.seed, kStageBeamsplit));
  run.save_tags("tags.zplt", ch_a, ch_b);

  const std::int64_t period_ps = ns_to_ps(train.period_ns());
  const std::int64_t range = period_ps * p.periods_each_side;
  CoincidenceHistogram hist =
      p.use_full_correlation
          ? full_correlation_histogram(ch_a, ch_b, p.bin_width_ps, -range, range)
          : symmetric_start_stop_histogram(ch_a, ch_b, p.bin_width_ps, range);
  run.save_hist("histogram.csv", hist);

  const std::int64_t window = p.peak_window_ps > 0 ? p.peak_window_ps : period_ps;
  const PeakTable peaks = peak_areas(hist, period_ps, window, p.lateral_peaks);
  {
    std::FILE* f = std::fopen((run.dir / "peaks.csv").string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot open peaks.csv");
    std::fprintf(f, "peak_index,center_ps,area\n");
    for (const PeakEntry& pe : peaks.peaks)
      std::fprintf(f, "%d,%.1f,%llu\n", pe.index, pe.center_ps,
                   static_cast<unsigned long long>(pe.area));
    std::fclose(f);
    run.add("peaks.csv");
  }

  const FitResult fit = fit_lateral_peak_decay(peaks, hist, period_ps);
  run.result.report["fit"] = fit_result_to_json(fit);
  run.result.report["metrics"] = {
      {"central_to_lateral_ratio", peaks.central_to_lateral_ratio},
      {"fraction_multi_photon_pulses", sim.fraction_multi()},
      {"two_photon_bound",
       two_photon_per_pulse_prob(p.pulse_duration_ns, cfg.molecule.tau_f_ns, p.p_exc)},
      {"signal_rate_cps", signal_rate},
      {"background_rate_cps", bg_rate},
      {"tau_f", fit.params.at("tau_f")},
  };
}

void run_saturation(Run& run) {
  const ExperimentConfig& cfg = run.cfg;
  const auto& p = cfg.saturation;
  const double eta = p.s_inf_cps * cfg.molecule.tau_f_ns * 1e-9;

  std::vector<SaturationPoint> points;
  std::vector<std::array<double, 3>> rows;
  for (std::size_t i = 0; i < p.s_values.size(); ++i) {
    const double s = p.s_values[i];
    const double power = s * cfg.molecule.p_sat_mw;
    const double expected_rate = p.s_inf_cps * s / (1.0 + s);
    const double duration = static_cast<double>(p.target_counts_per_point) / expected_rate;
    SimConfig point_cfg{Rng::derive(cfg.seed, kStageEmission + i), duration, 1};
    const std::uint64_t count = simulate_cw_detected_count(cfg.molecule, power, eta, point_cfg);
    const double rate = static_cast<double>(count) / duration;
    const double sigma = std::sqrt(std::max<double>(static_cast<double>(count), 1.0)) / duration;
    points.push_back({power, rate, sigma});
    rows.push_back({power, rate, sigma});
  }
  write_points_csv(run.dir / "saturation.csv", "power_mw,rate_cps,sigma_cps", rows);
  run.add("saturation.csv");

  const FitResult fit = fit_saturation(points);
  run.result.report["fit"] = fit_result_to_json(fit);
  run.result.report["metrics"] = {
      {"s_inf", fit.params.at("s_inf")},
      {"p_sat", fit.params.at("p_sat")},
      {"half_saturation_rate", saturation_signal(fit.params.at("p_sat"),
                                                 {fit.params.at("s_inf"), fit.params.at("p_sat")})},
  };
}

void run_excitation_scan(Run& run) {
  const ExperimentConfig& cfg = run.cfg;
  const auto& p = cfg.excitation_scan;
  const double fwhm0 =
      p.fwhm0_mhz > 0.0 ? p.fwhm0_mhz : lifetime_limited_linewidth_mhz(cfg.molecule.tau_f_ns);

  Rng rng(Rng::derive(cfg.seed, kStageEmission));
  std::vector<ScanPoint> points;
  std::vector<std::array<double, 3>> rows;
  for (int i = 0; i < p.n_points; ++i) {
    const double detuning =
        -0.5 * p.span_mhz + p.span_mhz * static_cast<double>(i) / static_cast<double>(p.n_points - 1);
    const double mean = p.floor_counts + p.peak_counts * excitation_lineshape(detuning, fwhm0, p.s);
    const auto counts = static_cast<double>(rng.poisson(mean));
    const double sigma = std::sqrt(std::max(counts, 1.0));
    points.push_back({detuning, counts, sigma});
    rows.push_back({detuning, counts, sigma});
  }
  write_points_csv(run.dir / "excitation_scan.csv", "detuning_mhz,counts,sigma", rows);
  run.add("excitation_scan.csv");

  const FitResult fit = fit_lorentzian(points);
  run.result.report["fit"] = fit_result_to_json(fit);
  run.result.report["metrics"] = {
      {"fwhm", fit.params.at("fwhm")},
      {"fwhm0_mhz", fwhm0},
      {"power_broadened_fwhm_mhz", fwhm0 * std::sqrt(1.0 + p.s)},
      {"lifetime_limited_mhz", lifetime_limited_linewidth_mhz(cfg.molecule.tau_f_ns)},
  };
}

void run_confocal_scan(Run& run) {
  const ExperimentConfig& cfg = run.cfg;
  const auto& p = cfg.confocal_scan;

  const double fwhm_nm = diffraction_resolution_nm(cfg.sil.wavelength_nm, cfg.sil.n_sil);
  const double sigma_nm = fwhm_nm / 2.3548200450309493;
  const double psf_norm = p.geometry.pixel_size_nm * p.geometry.pixel_size_nm /
                          (2.0 * kPi * sigma_nm * sigma_nm);
  std::vector<Emitter> emitters = p.emitters;
  for (Emitter& e : emitters) {
    if (e.brightness <= 0.0) {
      const double peak = p.peak_to_background * std::max(p.background_per_pixel, 1.0);
      e.brightness = peak / (p.dwell_ms * psf_norm);
    }
  }

  SimConfig scan_cfg{Rng::derive(cfg.seed, kStageScan), 1.0, 1};
  const ScanImage img = simulate_confocal_scan(emitters, cfg.sil, p.geometry,
                                               p.background_per_pixel, p.dwell_ms, scan_cfg);
  write_scan_txt((run.dir / "scan.txt").string(), img);
  run.add("scan.txt");
  write_scan_pgm((run.dir / "scan.pgm").string(), img);
  run.add("scan.pgm");

  std::uint64_t peak_count = 0;
  for (std::uint64_t v : img.pixels) peak_count = std::max(peak_count, v);
  json metrics = {
      {"diffraction_resolution_nm", fwhm_nm},
      {"peak_counts", peak_count},
      {"peak_to_background_measured",
       p.background_per_pixel > 0.0 ? static_cast<double>(peak_count) / p.background_per_pixel
                                    : 0.0},
      {"total_counts", img.total_counts()},
  };

  if (p.fit_spot && emitters.size() == 1) {
    const FitResult fit = fit_gaussian_spot(img, p.geometry.pixel_size_nm);
    run.result.report["fit"] = fit_result_to_json(fit);
    metrics["fwhm"] = fit.params.at("fwhm");
    metrics["fwhm_vs_diffraction"] = fit.params.at("fwhm") / fwhm_nm;
  }
  run.result.report["metrics"] = metrics;
}

void run_spectrum(Run& run) {
  const ExperimentConfig& cfg = run.cfg;
  const auto& p = cfg.spectrum;
  const auto& lines = cfg.molecule.lines;

  Rng rng(Rng::derive(cfg.seed, kStageEmission));
  const std::size_t n_bins =
      static_cast<std::size_t>(std::ceil((p.lambda_max_nm - p.lambda_min_nm) / p.bin_nm));
  std::vector<std::uint64_t> bins(n_bins, 0);
  std::vector<std::uint64_t> line_counts(lines.size(), 0);

  for (std::uint64_t i = 0; i < p.n_photons; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t line = lines.size() - 1;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      acc += lines[k].weight;
      if (u < acc) {
        line = k;
        break;
      }
    }
    ++line_counts[line];
    // Lorentzian line profile in wavelength (Cauchy deviate).
    const double gamma_nm = 0.5 * ghz_to_nm(lines[line].fwhm_ghz, lines[line].center_nm);
    const double lambda =
        lines[line].center_nm + gamma_nm * std::tan(kPi * (rng.uniform() - 0.5));
    if (lambda < p.lambda_min_nm || lambda >= p.lambda_max_nm) continue;
    ++bins[static_cast<std::size_t>((lambda - p.lambda_min_nm) / p.bin_nm)];
  }

  {
    std::FILE* f = std::fopen((run.dir / "spectrum.csv").string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot open spectrum.csv");
    std::fprintf(f, "wavelength_nm,counts\n");
    for (std::size_t i = 0; i < n_bins; ++i)
      std::fprintf(f, "%.17g,%llu\n", p.lambda_min_nm + (static_cast<double>(i) + 0.5) * p.bin_nm,
                   static_cast<unsigned long long>(bins[i]));
    std::fclose(f);
    run.add("spectrum.csv");
  }
  {
    std::FILE* f = std::fopen((run.dir / "lines.csv").string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot open lines.csv");
    std::fprintf(f, "center_nm,weight,fwhm_ghz,counts,fraction\n");
    for (std::size_t i = 0; i < lines.size(); ++i)
      std::fprintf(f, "%.17g,%.17g,%.17g,%llu,%.17g\n", lines[i].center_nm, lines[i].weight,
                   lines[i].fwhm_ghz, static_cast<unsigned long long>(line_counts[i]),
                   static_cast<double>(line_counts[i]) / static_cast<double>(p.n_photons));
    std::fclose(f);
    run.add("lines.csv");
  }

  run.result.report["metrics"] = {
      {"zpl_fraction_measured",
       static_cast<double>(line_counts[0]) / static_cast<double>(p.n_photons)},
      {"zpl_fraction_model", cfg.molecule.zpl_fraction},
      {"n_photons", p.n_photons},
  };
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();

  Run run{config, fs::path(config.out_dir), {}};
  fs::create_directories(run.dir);
  run.result.out_dir = config.out_dir;
  run.result.report = json::object();

  switch (config.kind) {
    case ExperimentKind::CwG2: run_cw_g2(run); break;
    case ExperimentKind::PulsedG2: run_pulsed_g2(run); break;
    case ExperimentKind::SaturationSweep: run_saturation(run); break;
    case ExperimentKind::ExcitationScan: run_excitation_scan(run); break;
    case ExperimentKind::ConfocalScan: run_confocal_scan(run); break;
    case ExperimentKind::Spectrum: run_spectrum(run); break;
  }

  run.finish();
  return run.result;
}

std::vector<std::string> preset_names() {
  return {"cw_g2", "pulsed_g2", "saturation_sweep", "excitation_scan", "confocal_scan", "spectrum"};
}

json preset_config(const std::string& name) {
  json j;
  j["kind"] = name;
  j["out_dir"] = "out/" + name;
  if (name == "cw_g2") {
    j["seed"] = 20090301;
    j["detector"] = {{"efficiency", 0.05}};
    j["cw_g2"] = {{"power_mw", 0.84},  {"duration_s", 1.5},     {"signal_to_background", 9.6},
                  {"bin_width_ps", 512}, {"tau_max_ps", 100000}, {"zpl_filter", true}};
  } else if (name == "pulsed_g2") {
    j["seed"] = 20090302;
    j["molecule"] = {{"tau_f_ns", 4.7}};
    j["detector"] = {{"efficiency", 0.2}};
    j["pulsed_g2"] = {{"rep_rate_mhz", 16.0},
                      {"pulse_duration_ns", 3e-4},
                      {"p_exc", 1.0},
                      {"n_pulses", 4000000},
                      {"signal_to_background", 7.553},
                      {"bin_width_ps", 625},
                      {"periods_each_side", 5},
                      {"lateral_peaks", 4},
                      {"allow_reexcitation", false}};
  } else if (name == "saturation_sweep") {
    j["seed"] = 20090303;
    j["saturation"] = {{"s_values", {0.2, 0.5, 1.0, 2.0, 5.0}},
                       {"s_inf_cps", 180000.0},
                       {"target_counts_per_point", 1000000}};
  } else if (name == "excitation_scan") {
    j["seed"] = 20090304;
    j["excitation_scan"] = {{"fwhm0_mhz", 0.0}, {"s", 0.05},          {"span_mhz", 300.0},
                            {"n_points", 61},   {"peak_counts", 20000.0}, {"floor_counts", 100.0}};
  } else if (name == "confocal_scan") {
    j["seed"] = 20090305;
    j["sil"] = {{"wavelength_nm", 767.0}};
    json emitter = {{"x_um", 1.0}, {"y_um", 1.0}};
    j["confocal_scan"] = {{"extent_x_um", 2.0},
                          {"extent_y_um", 2.0},
                          {"pixel_size_nm", 50.0},
                          {"background_per_pixel", 20.0},
                          {"dwell_ms", 1.0},
                          {"peak_to_background", 10.0},
                          {"emitters", json::array({emitter})}};
  } else if (name == "spectrum") {
    j["seed"] = 20090306;
    j["spectrum"] = {{"n_photons", 300000},
                     {"lambda_min_nm", 770.0},
                     {"lambda_max_nm", 840.0},
                     {"bin_nm", 0.25}};
  } else {
    throw ConfigError({"preset: unknown preset '" + name + "'"});
  }
  return j;
}

}  // namespace zpl
