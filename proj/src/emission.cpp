#include "zpl/emission.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "zpl/random.hpp"
#include "zpl/units.hpp"

namespace zpl {

namespace {

std::int64_t snap(std::int64_t t_ps, std::uint32_t resolution_ps) {
  if (resolution_ps <= 1) return t_ps;
  const std::int64_t res = static_cast<std::int64_t>(resolution_ps);
  return (t_ps / res) * res;
}

/// Draw a line index from the branching weights.
std::int16_t draw_line(const MoleculeModel& molecule, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < molecule.lines.size(); ++i) {
    acc += molecule.lines[i].weight;
    if (u < acc) return static_cast<std::int16_t>(i);
  }
  return static_cast<std::int16_t>(molecule.lines.size() - 1);
}

PhotonTag make_emission_tag(std::int64_t t_ps, std::int16_t line) {
  return {t_ps, line == 0 ? Origin::Zpl : Origin::RedShifted, line};
}

void check_capacity(double expected, std::uint64_t max_tags, const char* where) {
  if (expected > static_cast<double>(max_tags))
    throw CapacityError(std::string(where) + ": expected ~" + std::to_string(static_cast<long long>(expected)) +
                        " tags, exceeds max_tags = " + std::to_string(max_tags));
}

}  // namespace

void SimConfig::validate() const {
  if (duration_s <= 0.0) throw std::invalid_argument("SimConfig.duration: must be > 0");
  if (time_resolution_ps < 1) throw std::invalid_argument("SimConfig.time_resolution: must be >= 1 ps");
}

std::int64_t SimConfig::duration_ps() const { return seconds_to_ps(duration_s); }

void PulseTrain::validate() const {
  if (rep_rate_mhz <= 0.0) throw std::invalid_argument("PulseTrain.rep_rate: must be > 0");
  if (pulse_duration_ns <= 0.0) throw std::invalid_argument("PulseTrain.pulse_duration: must be > 0");
  if (pulse_duration_ns >= period_ns())
    throw std::invalid_argument("PulseTrain.pulse_duration: must be shorter than the period");
  if (p_exc < 0.0 || p_exc > 1.0) throw std::invalid_argument("PulseTrain.p_exc: must be in [0,1]");
}

PhotonStream simulate_cw_stream(const MoleculeModel& molecule, double power_mw,
                                const SimConfig& cfg) {
  if (power_mw < 0.0) throw std::invalid_argument("simulate_cw_stream: power must be >= 0");
  molecule.validate();
  cfg.validate();

  PhotonStream out;
  out.duration_ps = cfg.duration_ps();
  if (power_mw == 0.0) return out;

  const double k_exc = pump_rate_from_power(power_mw, molecule);  // 1/ns
  const double ground_mean_ps = kPsPerNs / k_exc;
  const double excited_mean_ps = molecule.tau_f_ns * kPsPerNs;

  const double expected = cw_emission_rate_per_ns(power_mw, molecule) * ps_to_ns(out.duration_ps);
  check_capacity(expected, cfg.max_tags, "simulate_cw_stream");
  out.tags.reserve(static_cast<std::size_t>(expected * 1.01) + 16);

  Rng rng(cfg.seed);
  std::int64_t t = 0;
  for (;;) {
    t += static_cast<std::int64_t>(std::llround(rng.exponential(ground_mean_ps)));
    t += static_cast<std::int64_t>(std::llround(rng.exponential(excited_mean_ps)));
    if (t >= out.duration_ps) break;
    out.tags.push_back(make_emission_tag(snap(t, cfg.time_resolution_ps), draw_line(molecule, rng)));
    if (out.tags.size() > cfg.max_tags)
      throw CapacityError("simulate_cw_stream: tag capacity exceeded");
  }
  return out;
}

namespace {

/// Shared skip-ahead core: keep_prob is the total thinning, line_pmf the
/// conditional line distribution of the kept photons.
PhotonStream cw_detected_impl(const MoleculeModel& molecule, double power_mw, double keep_prob,
                              const std::vector<double>& line_pmf, const SimConfig& cfg) {
  molecule.validate();
  cfg.validate();

  PhotonStream out;
  out.duration_ps = cfg.duration_ps();
  if (power_mw == 0.0) return out;

  const double k_exc = pump_rate_from_power(power_mw, molecule);
  const double ground_mean_ps = kPsPerNs / k_exc;
  const double excited_mean_ps = molecule.tau_f_ns * kPsPerNs;

  const double expected =
      cw_emission_rate_per_ns(power_mw, molecule) * keep_prob * ps_to_ns(out.duration_ps);
  check_capacity(expected, cfg.max_tags, "simulate_cw_detected");
  out.tags.reserve(static_cast<std::size_t>(expected * 1.01) + 16);

  Rng rng(cfg.seed);
  std::int64_t t = 0;
  for (;;) {
    // Skip ahead over the cycles whose emissions are discarded: the next kept
    // emission is the k-th one, k ~ Geometric(keep_prob), and the elapsed
    // time is a sum of k ground dwells plus k excited dwells.
    const double k = static_cast<double>(rng.geometric(keep_prob));
    const double gap_ps = rng.gamma(k, ground_mean_ps) + rng.gamma(k, excited_mean_ps);
    t += static_cast<std::int64_t>(std::llround(gap_ps));
    if (t >= out.duration_ps) break;
    const double u = rng.uniform();
    double acc = 0.0;
    std::int16_t line = static_cast<std::int16_t>(line_pmf.size() - 1);
    for (std::size_t i = 0; i < line_pmf.size(); ++i) {
      acc += line_pmf[i];
      if (u < acc) {
        line = static_cast<std::int16_t>(i);
        break;
      }
    }
    out.tags.push_back(make_emission_tag(snap(t, cfg.time_resolution_ps), line));
    if (out.tags.size() > cfg.max_tags)
      throw CapacityError("simulate_cw_detected: tag capacity exceeded");
  }
  return out;
}

}  // namespace

PhotonStream simulate_cw_detected(const MoleculeModel& molecule, double power_mw,
                                  double keep_prob, const SimConfig& cfg) {
  if (power_mw < 0.0) throw std::invalid_argument("simulate_cw_detected: power must be >= 0");
  if (keep_prob <= 0.0 || keep_prob > 1.0)
    throw std::invalid_argument("simulate_cw_detected: keep_prob must be in (0,1]");
  std::vector<double> pmf;
  for (const SpectralLine& ln : molecule.lines) pmf.push_back(ln.weight);
  return cw_detected_impl(molecule, power_mw, keep_prob, pmf, cfg);
}

PhotonStream simulate_cw_detected(const MoleculeModel& molecule, double power_mw,
                                  const std::vector<double>& line_keep, const SimConfig& cfg) {
  if (power_mw < 0.0) throw std::invalid_argument("simulate_cw_detected: power must be >= 0");
  if (line_keep.size() != molecule.lines.size())
    throw std::invalid_argument("simulate_cw_detected: need one keep probability per line");
  double total = 0.0;
  std::vector<double> pmf(line_keep.size());
  for (std::size_t i = 0; i < line_keep.size(); ++i) {
    if (line_keep[i] < 0.0 || line_keep[i] > 1.0)
      throw std::invalid_argument("simulate_cw_detected: keep probabilities must be in [0,1]");
    pmf[i] = molecule.lines[i].weight * line_keep[i];
    total += pmf[i];
  }
  if (total <= 0.0) throw std::invalid_argument("simulate_cw_detected: all lines blocked");
  for (double& v : pmf) v /= total;
  return cw_detected_impl(molecule, power_mw, total, pmf, cfg);
}

std::uint64_t simulate_cw_detected_count(const MoleculeModel& molecule, double power_mw,
                                         double keep_prob, const SimConfig& cfg) {
  if (power_mw < 0.0) throw std::invalid_argument("simulate_cw_detected_count: power must be >= 0");
  if (keep_prob <= 0.0 || keep_prob > 1.0)
    throw std::invalid_argument("simulate_cw_detected_count: keep_prob must be in (0,1]");
  molecule.validate();
  cfg.validate();
  if (power_mw == 0.0) return 0;

  const double k_exc = pump_rate_from_power(power_mw, molecule);
  const double ground_mean_ps = kPsPerNs / k_exc;
  const double excited_mean_ps = molecule.tau_f_ns * kPsPerNs;
  const std::int64_t duration = cfg.duration_ps();

  Rng rng(cfg.seed);
  std::int64_t t = 0;
  std::uint64_t n = 0;
  for (;;) {
    const double k = static_cast<double>(rng.geometric(keep_prob));
    const double gap_ps = rng.gamma(k, ground_mean_ps) + rng.gamma(k, excited_mean_ps);
    t += static_cast<std::int64_t>(std::llround(gap_ps));
    if (t >= duration) break;
    ++n;
  }
  return n;
}

double PulsedResult::fraction_multi() const {
  if (n_pulses == 0) return 0.0;
  std::uint64_t multi = 0;
  for (std::size_t k = 2; k < multiplicity.size(); ++k) multi += multiplicity[k];
  return static_cast<double>(multi) / static_cast<double>(n_pulses);
}

PulsedResult simulate_pulsed(const MoleculeModel& molecule, const PulseTrain& train,
                             const SimConfig& cfg, bool allow_reexcitation) {
  molecule.validate();
  train.validate();
  if (train.n_pulses == 0) throw std::invalid_argument("PulseTrain.n_pulses: must be > 0");

  PulsedResult res;
  res.n_pulses = train.n_pulses;
  res.multiplicity.assign(16, 0);

  const std::int64_t period_ps = ns_to_ps(train.period_ns());
  res.stream.duration_ps = period_ps * static_cast<std::int64_t>(train.n_pulses);

  check_capacity(static_cast<double>(train.n_pulses) * std::max(train.p_exc, 1e-3) * 1.01,
                 cfg.max_tags, "simulate_pulsed");
  res.stream.tags.reserve(static_cast<std::size_t>(
      static_cast<double>(train.n_pulses) * train.p_exc * 1.01 + 16));

  const double excited_mean_ps = molecule.tau_f_ns * kPsPerNs;
  const double window_ps = train.pulse_duration_ns * kPsPerNs;
  // Ground-state re-pump dwell inside the pulse window; zero mean = immediate.
  const double repump_mean_ps =
      train.p_exc >= 1.0 ? 0.0 : window_ps / (-std::log1p(-train.p_exc));

  Rng rng(cfg.seed);
  std::vector<std::int64_t> emitted;  // per-pulse scratch, photons may be out of order across pulses
  emitted.reserve(4);

  for (std::uint64_t i = 0; i < train.n_pulses; ++i) {
    const std::int64_t t_pulse = static_cast<std::int64_t>(i) * period_ps;
    const double window_end = static_cast<double>(t_pulse) + window_ps;
    std::uint32_t count = 0;
    if (rng.uniform() < train.p_exc) {
      double t_exc = static_cast<double>(t_pulse);
      for (;;) {
        const double t_emit = t_exc + rng.exponential(excited_mean_ps);
        ++count;
        const std::int64_t tag_ps = static_cast<std::int64_t>(std::llround(t_emit));
        if (tag_ps < res.stream.duration_ps)
          emitted.push_back(snap(tag_ps, cfg.time_resolution_ps));
        if (!allow_reexcitation || t_emit >= window_end) break;
        const double t_re = repump_mean_ps == 0.0 ? t_emit : t_emit + rng.exponential(repump_mean_ps);
        if (t_re >= window_end) break;
        t_exc = t_re;
      }
    }
    res.multiplicity[std::min<std::uint32_t>(count, 15)] += 1;
    for (std::int64_t tp : emitted) res.stream.tags.push_back(make_emission_tag(tp, draw_line(molecule, rng)));
    emitted.clear();
    if (res.stream.tags.size() > cfg.max_tags)
      throw CapacityError("simulate_pulsed: tag capacity exceeded");
  }

  // A long decay tail can emit after the next pulse's photon; restore order.
  std::sort(res.stream.tags.begin(), res.stream.tags.end(),
            [](const PhotonTag& a, const PhotonTag& b) { return a.time_ps < b.time_ps; });
  return res;
}

PhotonStream simulate_pulsed_stream(const MoleculeModel& molecule, const PulseTrain& train,
                                    const SimConfig& cfg, bool allow_reexcitation) {
  return simulate_pulsed(molecule, train, cfg, allow_reexcitation).stream;
}

}  // namespace zpl
