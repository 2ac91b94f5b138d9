#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "zpl/correlator.hpp"

namespace zpl {

struct FitResult {
  std::map<std::string, double> params;
  std::map<std::string, double> std_errors;
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  int n_iterations = 0;
  bool converged = false;
};

/// Optimizer ran out of iterations; carries the last iterate for diagnosis.
struct FitNotConverged : std::runtime_error {
  FitResult last;
  FitNotConverged(const std::string& what, FitResult r)
      : std::runtime_error(what), last(std::move(r)) {}
};

/// Input data violates a fitter precondition (too few points, no peak,
/// unresolvable structure, insufficient counts).
struct FitDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LmOptions {
  int max_iterations = 200;
  double gtol = 1e-9;        // relative Newton step implied by the gradient
  double stall_gtol = 1e-7;  // same metric, accepted when chi2 hits its floor
  double lambda0 = 1e-3;
};

/// Damped least squares on weighted residuals with box constraints. eval
/// fills r (n residuals) and, when J != nullptr, the row-major n x m
/// Jacobian d r_i / d p_j. Accepts only steps that decrease |r|^2; converged
/// means the scaled projected gradient fell below gtol.
struct LmProblem {
  std::vector<std::string> names;
  std::vector<double> p0;
  std::vector<double> lower, upper;
  std::size_t n_residuals = 0;
  std::function<void(const double* p, double* r, double* J)> eval;
};

FitResult lm_fit(const LmProblem& problem, const LmOptions& opts = {});

// Fit models with analytic partial derivatives (written to `d` when given).
// These are the exact gradients the optimizer uses; tests check them against
// central finite differences.
namespace models {

double saturation(double power_mw, double s_inf, double p_sat, double* d2 = nullptr);
double antibunching(double tau_ns, double s, double c_inf, double dip, double tau_f_ns,
                    double* d3 = nullptr);
double lorentzian(double x, double center, double fwhm, double amplitude, double offset,
                  double* d4 = nullptr);
double shifted_exp_peak(double delta_ns, double amplitude, double tau_f_ns, double floor,
                        double* d3 = nullptr);
double gaussian_spot(double x_nm, double y_nm, double x0, double y0, double fwhm, double amplitude,
                     double offset, double* d5 = nullptr);

}  // namespace models

struct SaturationPoint {
  double power_mw = 0.0;
  double rate_cps = 0.0;
  double sigma = 1.0;
};

struct ScanPoint {
  double detuning_mhz = 0.0;
  double rate = 0.0;
  double sigma = 1.0;
};

/// Weighted fit of the saturation law; returns s_inf and p_sat.
FitResult fit_saturation(std::vector<SaturationPoint> points, const LmOptions& opts = {});

/// Poisson-weighted fit of the cw correlation model with known s = P/P_sat;
/// returns c_inf, dip (constrained to [0,1]) and tau_f (ns).
FitResult fit_antibunching(const CoincidenceHistogram& hist, double s, const LmOptions& opts = {});

/// Lorentzian line fit; returns center, fwhm (> 0), amplitude, offset.
FitResult fit_lorentzian(std::vector<ScanPoint> points, const LmOptions& opts = {});

/// Pooled two-sided exponential fit of the lateral peak shapes of a pulsed
/// coincidence histogram; returns tau_f (ns) plus per-peak amplitudes.
FitResult fit_lateral_peak_decay(const PeakTable& table, const CoincidenceHistogram& hist,
                                 std::int64_t rep_period_ps, const LmOptions& opts = {});

struct ScanImage;

/// Symmetric 2-D Gaussian plus constant background fit of a confocal spot;
/// returns x0, y0 (nm), fwhm (nm), amplitude, offset.
FitResult fit_gaussian_spot(const ScanImage& image, double pixel_size_nm,
                            const LmOptions& opts = {});

}  // namespace zpl
