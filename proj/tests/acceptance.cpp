// Acceptance suite: runs every quantitative target end to end and prints one
// pass/fail line per criterion. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "zpl/correlator.hpp"
#include "zpl/detection.hpp"
#include "zpl/experiment.hpp"
#include "zpl/fit.hpp"
#include "zpl/random.hpp"
#include "zpl/sil.hpp"
#include "zpl/units.hpp"

using namespace zpl;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string out_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "zplsim_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

char buf[512];

// ---------------------------------------------------------------------------

void criterion1_saturation_roundtrip() {
  const auto t0 = std::chrono::steady_clock::now();
  json j = preset_config("saturation_sweep");
  j["seed"] = 101;
  j["out_dir"] = out_dir("saturation");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  const double elapsed = seconds_since(t0);

  const double s_inf = res.report["fit"]["params"]["s_inf"].get<double>();
  const double p_sat = res.report["fit"]["params"]["p_sat"].get<double>();
  const double err_sinf = std::abs(s_inf - 180e3) / 180e3;
  const double err_psat = std::abs(p_sat - 3.5) / 3.5;
  const bool pass = err_sinf < 0.03 && err_psat < 0.03 && elapsed < 30.0;
  std::snprintf(buf, sizeof buf,
                "s_inf=%.0f (err %.2f%%), p_sat=%.3f mW (err %.2f%%), runtime %.1f s", s_inf,
                100 * err_sinf, p_sat, 100 * err_psat, elapsed);
  report(1, "saturation law round trip at s in {0.2,0.5,1,2,5}", pass, buf);
}

void criterion2_cw_antibunching() {
  json j = preset_config("cw_g2");
  j["seed"] = 102;
  j["out_dir"] = out_dir("cw_g2");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  const double dip = res.report["metrics"]["dip"].get<double>();
  const double tau_f = res.report["metrics"]["tau_f"].get<double>();
  const double photons = res.report["metrics"]["detected_photons"].get<double>();

  json jz = preset_config("cw_g2");
  jz["seed"] = 112;
  jz["cw_g2"]["signal_to_background"] = 0.0;
  jz["cw_g2"]["duration_s"] = 0.8;
  jz["out_dir"] = out_dir("cw_g2_clean");
  const ExperimentResult clean = run_experiment(ExperimentConfig::from_json(jz));
  const double dip_clean = clean.report["metrics"]["dip"].get<double>();

  const bool pass = std::abs(dip - 0.82) <= 0.03 && std::abs(tau_f - 4.5) <= 0.15 &&
                    dip_clean >= 0.97 && photons >= 1e6;
  std::snprintf(buf, sizeof buf,
                "dip=%.3f (0.82+-0.03), tau_f=%.3f ns (4.5+-0.15), clean dip=%.3f (>=0.97), "
                "%.2g detected photons",
                dip, tau_f, dip_clean, photons);
  report(2, "cw S:B=9.6 antibunching end to end", pass, buf);
}

void criterion3_pulsed_peaks() {
  json j = preset_config("pulsed_g2");
  j["seed"] = 103;
  j["out_dir"] = out_dir("pulsed_g2");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  const double ratio = res.report["metrics"]["central_to_lateral_ratio"].get<double>();
  const double tau_f = res.report["fit"]["params"]["tau_f"].get<double>();

  // zero background, re-excitation disabled: exactly empty central window
  json jz = preset_config("pulsed_g2");
  jz["seed"] = 113;
  jz["molecule"] = {{"tau_f_ns", 4.5}};
  jz["detector"] = {{"efficiency", 0.5}};
  jz["pulsed_g2"]["signal_to_background"] = 0.0;
  jz["pulsed_g2"]["n_pulses"] = 500000;
  jz["pulsed_g2"]["peak_window_ps"] = 12000;
  jz["out_dir"] = out_dir("pulsed_clean");
  const ExperimentResult clean = run_experiment(ExperimentConfig::from_json(jz));
  const double ratio_clean = clean.report["metrics"]["central_to_lateral_ratio"].get<double>();

  const bool pass =
      std::abs(ratio - 0.22) <= 0.03 && std::abs(tau_f - 4.7) <= 0.3 && ratio_clean == 0.0;
  std::snprintf(buf, sizeof buf,
                "central/lateral=%.3f (0.22+-0.03), lateral decay tau_f=%.3f ns (4.7+-0.3), "
                "clean central ratio=%.5f (exact 0)",
                ratio, tau_f, ratio_clean);
  report(3, "pulsed 16 MHz peak pattern", pass, buf);
}

void criterion4_two_photon_bound() {
  const MoleculeModel mol = MoleculeModel::dbt_defaults();
  PulseTrain train{16.0, 3e-4, 1.0, 3'000'000};
  SimConfig cfg{104, 1.0, 1};
  const PulsedResult sim = simulate_pulsed(mol, train, cfg, true);
  const double frac = sim.fraction_multi();
  const double bound = two_photon_per_pulse_prob(train.pulse_duration_ns, mol.tau_f_ns, 1.0);
  const double sigma = std::sqrt(bound * (1.0 - bound) / static_cast<double>(train.n_pulses));
  const bool pass = frac < 0.01 && bound < 0.01 && std::abs(frac - bound) <= 2.0 * sigma;
  std::snprintf(buf, sizeof buf, "MC fraction=%.3g, closed form=%.3g, |diff|=%.2g (2sigma=%.2g)",
                frac, bound, std::abs(frac - bound), 2.0 * sigma);
  report(4, "two-photon probability per 300 fs pulse below 1%", pass, buf);
}

void criterion5_linewidth() {
  const double lw = lifetime_limited_linewidth_mhz(4.5);
  const bool lw_ok = std::abs(lw - 35.4) <= 0.1;

  json j = preset_config("excitation_scan");
  j["seed"] = 105;
  j["out_dir"] = out_dir("excitation");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  const double fwhm = res.report["metrics"]["fwhm"].get<double>();
  const double fwhm0 = res.report["metrics"]["fwhm0_mhz"].get<double>();
  const bool fit_ok = std::abs(fwhm - fwhm0) / fwhm0 < 0.03;

  // measured 37 MHz sits inside the s <= 0.1 power-broadened band of 35.4 MHz
  const bool band_ok = 37.0 >= lw && 37.0 <= lw * std::sqrt(1.1);

  const bool pass = lw_ok && fit_ok && band_ok;
  std::snprintf(buf, sizeof buf,
                "1/(2 pi tau_f)=%.2f MHz (35.4+-0.1), scan fit=%.2f vs input %.2f MHz "
                "(%.2f%%), 37 MHz in [%.2f, %.2f]",
                lw, fwhm, fwhm0, 100 * std::abs(fwhm - fwhm0) / fwhm0, lw, lw * std::sqrt(1.1));
  report(5, "lifetime-limited linewidth consistency", pass, buf);
}

void criterion6_sil_geometry() {
  SilSystem sys;
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double u = -kPi / 2.0 + kPi * static_cast<double>(i) / 100.0;
    const double exit = trace_meridional_ray(sys, u);
    worst = std::max(worst, std::abs(sys.n_sil * std::sin(exit) - std::sin(u)));
  }
  const double na_out = weierstrass_output_na(1.8);
  const double na_eff = effective_na(sys);
  const double res = diffraction_resolution_nm(785.0, 1.8);
  const bool pass = worst < 1e-9 && std::abs(na_out - 0.556) < 1e-3 &&
                    std::abs(na_eff - 1.782) < 1e-9 && std::abs(res - 266.0) < 0.5;
  std::snprintf(buf, sizeof buf,
                "max |n sin(exit) - sin(source)| = %.2g, NA_out=%.4f (~0.556), NA_eff=%.4f "
                "(1.782), resolution=%.1f nm (266)",
                worst, na_out, na_eff, res);
  report(6, "Weierstrass SIL geometry", pass, buf);
}

void criterion7_confocal_loop() {
  json j = preset_config("confocal_scan");
  j["seed"] = 107;
  j["out_dir"] = out_dir("confocal");
  const ExperimentResult res = run_experiment(ExperimentConfig::from_json(j));
  const double fwhm = res.report["fit"]["params"]["fwhm"].get<double>();
  const double target = diffraction_resolution_nm(767.0, 1.8);
  const double rel = std::abs(fwhm - target) / target;
  // the paper's measured 300 +- 20 nm is the hardware-limited comparison
  // point, documented here but not gated
  const bool pass = rel < 0.10;
  std::snprintf(buf, sizeof buf, "fitted FWHM=%.1f nm vs 0.61*767/1.8=%.1f nm (%.1f%%)", fwhm,
                target, 100 * rel);
  report(7, "confocal scan spot fit within 10% of the diffraction limit", pass, buf);
}

bool prop_determinism() {
  const MoleculeModel mol = MoleculeModel::dbt_defaults();
  SimConfig cfg{108, 0.002, 1};
  const PhotonStream a = simulate_cw_stream(mol, 0.84, cfg);
  const PhotonStream b = simulate_cw_stream(mol, 0.84, cfg);
  return a.tags == b.tags && !a.empty();
}

bool prop_partition() {
  const MoleculeModel mol = MoleculeModel::dbt_defaults();
  SimConfig cfg{109, 0.002, 1};
  const PhotonStream input = simulate_cw_stream(mol, 3.5, cfg);
  auto [a, b] = beamsplit(input, 0.5, 110);
  return merge_streams(a, b).tags == input.tags;
}

bool prop_dead_time() {
  const MoleculeModel mol = MoleculeModel::dbt_defaults();
  SimConfig cfg{111, 0.002, 1};
  const PhotonStream input = simulate_cw_stream(mol, 3.5, cfg);
  const PhotonStream out = apply_detector(input, DetectorModel{1.0, 50.0, 0.0, 0.0}, cfg);
  const std::int64_t dead_ps = ns_to_ps(50.0);
  for (std::size_t i = 1; i < out.tags.size(); ++i)
    if (out.tags[i].time_ps - out.tags[i - 1].time_ps < dead_ps) return false;
  return out.is_sorted() && out.size() > 0;
}

bool prop_symmetry() {
  PhotonStream a, b;
  a.duration_ps = b.duration_ps = seconds_to_ps(0.01);
  Rng rng(112);
  std::int64_t t = 0;
  while ((t += static_cast<std::int64_t>(rng.exponential(2e6))) < a.duration_ps)
    a.tags.push_back({t, Origin::Zpl, 0});
  t = 0;
  while ((t += static_cast<std::int64_t>(rng.exponential(1.5e6))) < b.duration_ps)
    b.tags.push_back({t, Origin::Zpl, 0});
  const CoincidenceHistogram ab = full_correlation_histogram(a, b, 1000, -100000, 100000);
  const CoincidenceHistogram ba = full_correlation_histogram(b, a, 1000, -100000, 100000);
  for (std::size_t i = 0; i < ab.n_bins(); ++i)
    if (ab.counts[i] != ba.counts[ab.n_bins() - 1 - i]) return false;
  return true;
}

bool prop_fit_roundtrips() {
  const SaturationCurve truth{180e3, 3.5};
  std::vector<SaturationPoint> pts;
  for (double s : {0.1, 0.3, 1.0, 3.0, 8.0})
    pts.push_back({s * 3.5, saturation_signal(s * 3.5, truth), 1.0});
  const FitResult sat = fit_saturation(pts);
  if (std::abs(sat.params.at("s_inf") - 180e3) / 180e3 > 1e-6) return false;
  if (std::abs(sat.params.at("p_sat") - 3.5) / 3.5 > 1e-6) return false;

  std::vector<ScanPoint> line;
  for (int i = 0; i <= 60; ++i) {
    const double x = -150.0 + 5.0 * i;
    line.push_back({x, models::lorentzian(x, 3.0, 37.0, 900.0, 12.0, nullptr), 1.0});
  }
  const FitResult lor = fit_lorentzian(line);
  return std::abs(lor.params.at("fwhm") - 37.0) / 37.0 < 1e-6 &&
         std::abs(lor.params.at("center") - 3.0) < 1e-6;
}

bool prop_gradients() {
  Rng rng(113);
  for (int rep = 0; rep < 10; ++rep) {
    const double power = 0.5 + 5.0 * rng.uniform();
    const double p0 = 1e5, p1 = 2.0 + 3.0 * rng.uniform();
    double d[2];
    models::saturation(power, p0, p1, d);
    const double h0 = 1e-6 * p0;
    const double fd0 =
        (models::saturation(power, p0 + h0, p1, nullptr) - models::saturation(power, p0 - h0, p1, nullptr)) /
        (2 * h0);
    if (std::abs(d[0] - fd0) > 1e-6 * std::max(1.0, std::abs(fd0))) return false;
    const double h1 = 1e-6 * p1;
    const double fd1 =
        (models::saturation(power, p0, p1 + h1, nullptr) - models::saturation(power, p0, p1 - h1, nullptr)) /
        (2 * h1);
    if (std::abs(d[1] - fd1) > 1e-6 * std::max(1.0, std::abs(fd1))) return false;
  }
  return true;
}

bool prop_performance(std::string& detail) {
  PhotonStream a, b;
  a.duration_ps = b.duration_ps = seconds_to_ps(10.0);
  Rng rng(114);
  std::int64_t t = 0;
  a.tags.reserve(10'000'000);
  b.tags.reserve(10'000'000);
  while (a.tags.size() < 10'000'000) {
    t += static_cast<std::int64_t>(std::llround(rng.exponential(1e6)));
    a.tags.push_back({t, Origin::Zpl, 0});
  }
  t = 0;
  while (b.tags.size() < 10'000'000) {
    t += static_cast<std::int64_t>(std::llround(rng.exponential(1e6)));
    b.tags.push_back({t, Origin::Zpl, 0});
  }
  const auto t0 = std::chrono::steady_clock::now();
  const CoincidenceHistogram h = full_correlation_histogram(a, b, 1000, -500000, 500000);
  const double elapsed = seconds_since(t0);
  char tmp[128];
  std::snprintf(tmp, sizeof tmp, "2e7 tags over a 1 us window in %.2f s, %llu pairs", elapsed,
                static_cast<unsigned long long>(h.total_counts()));
  detail = tmp;
  return elapsed < 10.0 && h.total_counts() > 0;
}

void criterion8_property_suites() {
  std::string perf_detail;
  struct Prop {
    const char* name;
    bool ok;
  };
  const bool perf = prop_performance(perf_detail);
  const Prop props[] = {
      {"determinism", prop_determinism()},   {"beamsplit partition", prop_partition()},
      {"dead-time gap", prop_dead_time()},   {"histogram symmetry", prop_symmetry()},
      {"fit round-trips", prop_fit_roundtrips()}, {"gradient checks", prop_gradients()},
      {"correlator performance", perf},
  };
  bool pass = true;
  std::string detail;
  for (const Prop& p : props) {
    if (!p.ok) pass = false;
    detail += std::string(p.name) + (p.ok ? " ok; " : " FAILED; ");
  }
  detail += perf_detail;
  report(8, "module property suites", pass, detail);
}

}  // namespace

int main() {
  std::printf("zplsim acceptance suite\n");
  criterion1_saturation_roundtrip();
  criterion2_cw_antibunching();
  criterion3_pulsed_peaks();
  criterion4_two_photon_bound();
  criterion5_linewidth();
  criterion6_sil_geometry();
  criterion7_confocal_loop();
  criterion8_property_suites();
  if (g_failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  return g_failures;
}
