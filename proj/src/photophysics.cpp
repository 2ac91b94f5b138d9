#include "zpl/photophysics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "zpl/units.hpp"

namespace zpl {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void MoleculeModel::validate() const {
  require(tau_f_ns > 0.0, "MoleculeModel.tau_f: must be > 0");
  require(p_sat_mw > 0.0, "MoleculeModel.p_sat: must be > 0");
  require(zpl_fraction > 0.0 && zpl_fraction <= 1.0, "MoleculeModel.zpl_fraction: must be in (0,1]");
  require(isc_yield >= 0.0, "MoleculeModel.isc_yield: must be >= 0");
  require(vibronic_relax_ps > 0.0, "MoleculeModel.vibronic_relax: must be > 0");
  // Eq. validity regime: vibronic relaxation treated as instantaneous.
  require(vibronic_relax_ps * 1e-3 / tau_f_ns < 1e-2,
          "MoleculeModel.vibronic_relax: must be << tau_f (ratio < 1e-2)");
  require(!lines.empty(), "MoleculeModel.lines: must not be empty");
  double wsum = 0.0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& ln = lines[i];
    const std::string tag = "MoleculeModel.lines[" + std::to_string(i) + "]";
    require(ln.center_nm > 0.0, tag + ".center: must be > 0");
    require(ln.weight >= 0.0 && ln.weight <= 1.0, tag + ".weight: must be in [0,1]");
    require(ln.fwhm_ghz > 0.0, tag + ".fwhm: must be > 0");
    wsum += ln.weight;
  }
  require(std::abs(wsum - 1.0) <= 1e-9, "MoleculeModel.lines: weights must sum to 1");
  require(std::abs(lines[0].weight - zpl_fraction) <= 1e-9,
          "MoleculeModel.zpl_fraction: must equal the ZPL line weight (lines[0])");
}

MoleculeModel MoleculeModel::dbt_defaults() {
  MoleculeModel m;
  m.tau_f_ns = 4.5;
  m.p_sat_mw = 3.5;
  m.zpl_fraction = 0.33;
  m.isc_yield = 0.0;
  m.vibronic_relax_ps = 1.0;
  // ZPL at 785 nm (lifetime-limited, 37 MHz = 0.037 GHz) plus one aggregate
  // band standing in for all vibronic lines and phonon sidebands.
  m.lines = {{785.0, 0.33, 0.037}, {810.0, 0.67, 1000.0}};
  return m;
}

double saturation_signal(double power_mw, const SaturationCurve& curve) {
  if (power_mw < 0.0) throw std::invalid_argument("saturation_signal: power must be >= 0");
  if (curve.s_inf_cps <= 0.0) throw std::invalid_argument("SaturationCurve.s_inf: must be > 0");
  if (curve.p_sat_mw <= 0.0) throw std::invalid_argument("SaturationCurve.p_sat: must be > 0");
  const double s = power_mw / curve.p_sat_mw;
  return curve.s_inf_cps * s / (1.0 + s);
}

double analytic_g2_cw(double tau_ns, double dip, double tau_f_ns, double s, double c_inf) {
  if (tau_f_ns <= 0.0) throw std::invalid_argument("analytic_g2_cw: tau_f must be > 0");
  if (dip < 0.0 || dip > 1.0) throw std::invalid_argument("analytic_g2_cw: dip must be in [0,1]");
  if (s < 0.0) throw std::invalid_argument("analytic_g2_cw: s must be >= 0");
  return c_inf * (1.0 - dip * std::exp(-(std::abs(tau_ns) / tau_f_ns) * (1.0 + s)));
}

double excitation_lineshape(double detuning_mhz, double fwhm0_mhz, double s) {
  if (fwhm0_mhz <= 0.0) throw std::invalid_argument("excitation_lineshape: fwhm0 must be > 0");
  if (s < 0.0) throw std::invalid_argument("excitation_lineshape: s must be >= 0");
  const double half_width = 0.5 * fwhm0_mhz * std::sqrt(1.0 + s);
  const double x = detuning_mhz / half_width;
  return 1.0 / (1.0 + x * x);
}

double lifetime_limited_linewidth_mhz(double tau_f_ns) {
  if (tau_f_ns <= 0.0) throw std::invalid_argument("lifetime_limited_linewidth: tau_f must be > 0");
  // 1/(2 pi tau_f); with tau_f in ns the result is in GHz, so scale to MHz.
  return 1e3 / (2.0 * kPi * tau_f_ns);
}

double pump_rate_from_power(double power_mw, const MoleculeModel& molecule) {
  if (power_mw < 0.0) throw std::invalid_argument("pump_rate_from_power: power must be >= 0");
  molecule.validate();
  return (power_mw / molecule.p_sat_mw) / molecule.tau_f_ns;
}

double cw_emission_rate_per_ns(double power_mw, const MoleculeModel& molecule) {
  if (power_mw < 0.0) throw std::invalid_argument("cw_emission_rate: power must be >= 0");
  const double s = power_mw / molecule.p_sat_mw;
  return s / ((1.0 + s) * molecule.tau_f_ns);
}

double two_photon_per_pulse_prob(double pulse_duration_ns, double tau_f_ns, double p_exc) {
  if (pulse_duration_ns <= 0.0)
    throw std::invalid_argument("two_photon_per_pulse_prob: pulse_duration must be > 0");
  if (tau_f_ns <= 0.0) throw std::invalid_argument("two_photon_per_pulse_prob: tau_f must be > 0");
  if (p_exc < 0.0 || p_exc > 1.0)
    throw std::invalid_argument("two_photon_per_pulse_prob: p_exc must be in [0,1]");
  if (p_exc == 0.0) return 0.0;

  const double T = pulse_duration_ns;
  const double p_decay = -std::expm1(-T / tau_f_ns);  // decay inside the window
  if (p_exc >= 1.0) {
    // Saturated pulse: re-excitation is immediate, so a second photon needs
    // only the first decay to land inside the window.
    return p_decay;
  }
  // Re-pump rate chosen so a full window re-excites with probability p_exc.
  const double k_p = -std::log1p(-p_exc) / T;
  // P = p_exc * Int_0^T (1/tau) e^{-t/tau} [1 - e^{-k_p (T-t)}] dt
  const double ktau = k_p * tau_f_ns;
  double blocked;  // Int_0^T (1/tau) e^{-t/tau} e^{-k_p(T-t)} dt
  if (std::abs(ktau - 1.0) < 1e-9) {
    blocked = (T / tau_f_ns) * std::exp(-T / tau_f_ns);
  } else {
    blocked = (std::exp(-T / tau_f_ns) - std::exp(-k_p * T)) / (ktau - 1.0);
  }
  return p_exc * (p_decay - blocked);
}

}  // namespace zpl
