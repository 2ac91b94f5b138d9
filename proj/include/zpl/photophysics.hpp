#pragma once

#include <vector>

namespace zpl {

/// One emission line of the molecule: the ZPL or an aggregate vibronic band.
struct SpectralLine {
  double center_nm = 0.0;
  double weight = 0.0;    // branching fraction, all lines sum to 1
  double fwhm_ghz = 0.0;
};

/// Two-level photophysical model of a single DBT-like molecule. The ZPL is
/// lines[0] by convention; its weight must equal zpl_fraction.
struct MoleculeModel {
  double tau_f_ns = 4.5;          // excited-state lifetime
  double p_sat_mw = 3.5;          // saturation power
  double zpl_fraction = 0.33;     // ZPL branching of total emission
  double isc_yield = 0.0;         // intersystem-crossing probability per cycle
  double vibronic_relax_ps = 1.0; // vibronic relaxation time
  std::vector<SpectralLine> lines;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// DBT in anthracene at 2 K: 4.5 ns lifetime, 3.5 mW saturation power,
  /// 33% ZPL at 785 nm plus one aggregate red-shifted band at 810 nm.
  static MoleculeModel dbt_defaults();
};

struct SaturationCurve {
  double s_inf_cps = 0.0;  // saturated count rate
  double p_sat_mw = 0.0;   // saturation power
};

/// Detected count rate at the given excitation power:
/// S = S_inf * (P/P_sat) / (1 + P/P_sat).
double saturation_signal(double power_mw, const SaturationCurve& curve);

/// CW start-stop correlation model
/// C(tau) = c_inf * {1 - dip * exp[-(|tau|/tau_f)(1+s)]}, s = P/P_sat.
double analytic_g2_cw(double tau_ns, double dip, double tau_f_ns, double s, double c_inf);

/// Power-broadened Lorentzian excitation line, peak 1 at zero detuning,
/// FWHM = fwhm0 * sqrt(1+s).
double excitation_lineshape(double detuning_mhz, double fwhm0_mhz, double s);

/// Lifetime-limited ZPL width: 1/(2*pi*tau_f), returned in MHz.
double lifetime_limited_linewidth_mhz(double tau_f_ns);

/// Pump rate k_exc = (P/P_sat)/tau_f in 1/ns. This is the unique two-state
/// cycle rate for which the mean emission rate is (1/tau_f)*s/(1+s) and the
/// correlation rise rate is (1+s)/tau_f.
double pump_rate_from_power(double power_mw, const MoleculeModel& molecule);

/// Mean emission rate of the pumped cycle, in photons per ns:
/// (1/tau_f) * s/(1+s).
double cw_emission_rate_per_ns(double power_mw, const MoleculeModel& molecule);

/// Probability that a single pulse triggers two or more emissions, under the
/// intra-pulse re-excitation model: excitation at the pulse start with
/// probability p_exc, then a constant re-pump rate k_p inside the remaining
/// window with 1 - exp(-k_p * T) = p_exc. Closed form, exact for the model
/// simulated by simulate_pulsed.
double two_photon_per_pulse_prob(double pulse_duration_ns, double tau_f_ns, double p_exc);

}  // namespace zpl
