#pragma once

#include <cstdint>
#include <stdexcept>

#include "zpl/photophysics.hpp"
#include "zpl/stream.hpp"

namespace zpl {

struct SimConfig {
  std::uint64_t seed = 1;
  double duration_s = 1.0;
  std::uint32_t time_resolution_ps = 1;     // tick size; tags snap to this grid
  std::uint64_t max_tags = 100'000'000;     // capacity guard

  void validate() const;
  std::int64_t duration_ps() const;
};

/// Thrown when the expected tag count of a run exceeds SimConfig.max_tags.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PulseTrain {
  double rep_rate_mhz = 16.0;
  double pulse_duration_ns = 300e-6;  // 300 fs
  double p_exc = 1.0;                 // excitation probability per pulse
  std::uint64_t n_pulses = 0;

  void validate() const;
  double period_ns() const { return 1e3 / rep_rate_mhz; }
};

/// Quantum-jump Monte Carlo of the cw-pumped two-level cycle: alternating
/// exponential ground and excited dwells, one photon per decay. The photon's
/// line is drawn from molecule.lines. Deterministic per cfg.seed.
PhotonStream simulate_cw_stream(const MoleculeModel& molecule, double power_mw,
                                const SimConfig& cfg);

/// Same emission process thinned by an independent keep probability, without
/// materializing the discarded photons: gaps between kept photons are sampled
/// as Gamma sums over a Geometric number of pump cycles. Statistically
/// identical to simulate_cw_stream followed by Bernoulli(keep_prob) thinning.
PhotonStream simulate_cw_detected(const MoleculeModel& molecule, double power_mw,
                                  double keep_prob, const SimConfig& cfg);

/// Per-line keep probabilities (spectral filter x detector efficiency folded
/// into one thinning); kept photons draw their line from the conditional
/// distribution weight_i * keep_i.
PhotonStream simulate_cw_detected(const MoleculeModel& molecule, double power_mw,
                                  const std::vector<double>& line_keep, const SimConfig& cfg);

/// Count-only variant of simulate_cw_detected for rate measurements.
std::uint64_t simulate_cw_detected_count(const MoleculeModel& molecule, double power_mw,
                                         double keep_prob, const SimConfig& cfg);

struct PulsedResult {
  PhotonStream stream;
  std::uint64_t n_pulses = 0;
  /// multiplicity[k] = number of pulses that emitted exactly k photons
  /// (k capped at multiplicity.size()-1).
  std::vector<std::uint64_t> multiplicity;

  double fraction_multi() const;  // fraction of pulses emitting >= 2 photons
};

/// Triggered emission: each pulse excites at its start time with probability
/// p_exc; each excitation decays after an Exp(tau_f) delay, emitting one
/// photon. With allow_reexcitation, a constant re-pump acts on the ground
/// state for the remainder of the pulse window (rate set so that a full
/// window re-excites with probability p_exc; immediate for p_exc = 1).
PulsedResult simulate_pulsed(const MoleculeModel& molecule, const PulseTrain& train,
                             const SimConfig& cfg, bool allow_reexcitation = false);

PhotonStream simulate_pulsed_stream(const MoleculeModel& molecule, const PulseTrain& train,
                                    const SimConfig& cfg, bool allow_reexcitation = false);

}  // namespace zpl
