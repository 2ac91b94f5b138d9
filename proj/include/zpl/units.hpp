#pragma once

#include <cmath>
#include <cstdint>

namespace zpl {

// All photon time tags are 64-bit integer picoseconds. Rates and model
// parameters carry their unit in the identifier (ns, ps, mW, MHz, nm, cps).

constexpr double kSpeedOfLight_m_s = 299792458.0;
constexpr double kPi = 3.14159265358979323846;

constexpr double kPsPerNs = 1.0e3;
constexpr double kPsPerUs = 1.0e6;
constexpr double kPsPerMs = 1.0e9;
constexpr double kPsPerS = 1.0e12;

inline std::int64_t ns_to_ps(double t_ns) {
  return static_cast<std::int64_t>(std::llround(t_ns * kPsPerNs));
}

inline std::int64_t seconds_to_ps(double t_s) {
  return static_cast<std::int64_t>(std::llround(t_s * kPsPerS));
}

inline double ps_to_ns(std::int64_t t_ps) { return static_cast<double>(t_ps) / kPsPerNs; }

// Linewidth conversion between frequency (GHz) and wavelength (nm) at a
// given center wavelength: dlambda = lambda^2 * dnu / c.
inline double ghz_to_nm(double fwhm_ghz, double center_nm) {
  const double lambda_m = center_nm * 1e-9;
  return lambda_m * lambda_m * (fwhm_ghz * 1e9) / kSpeedOfLight_m_s * 1e9;
}

}  // namespace zpl
