#pragma once

#include "zpl/emission.hpp"
#include "zpl/photophysics.hpp"
#include "zpl/stream.hpp"

namespace zpl {

/// Ideal top-hat spectral window: band-pass around a center, long-pass above
/// a cutoff, or all-pass. Photons pass if their line center lies inside.
/// Background and dark tags are broadband and pass every window.
struct SpectralWindow {
  enum class Kind { BandPass, LongPass, AllPass };
  Kind kind = Kind::AllPass;
  double center_nm = 0.0;
  double width_nm = 0.0;
  double cutoff_nm = 0.0;

  static SpectralWindow band_pass(double center_nm, double width_nm);
  static SpectralWindow long_pass(double cutoff_nm);
  static SpectralWindow all_pass() { return {}; }

  bool passes(double wavelength_nm) const;
};

struct DetectorModel {
  double efficiency = 1.0;     // detection probability per photon
  double dead_time_ns = 0.0;   // non-paralyzable
  double jitter_sigma_ps = 0.0;
  double dark_rate_cps = 0.0;

  void validate() const;
};

/// Keep the photons whose emission line falls inside the window.
PhotonStream apply_spectral_filter(const PhotonStream& stream, const SpectralWindow& window,
                                   const MoleculeModel& molecule);

/// Merge an independent homogeneous Poisson background over the stream's
/// observation window. Deterministic per cfg.seed.
PhotonStream add_background(const PhotonStream& stream, double rate_cps, const SimConfig& cfg);

/// Detection chain: Bernoulli thinning by efficiency, per-tag Gaussian timing
/// jitter, Poisson dark counts, re-sort, then non-paralyzable dead time.
/// Tags jittered outside the observation window are dropped.
PhotonStream apply_detector(const PhotonStream& stream, const DetectorModel& det,
                            const SimConfig& cfg);

}  // namespace zpl
