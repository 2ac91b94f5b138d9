#include "zpl/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zpl/random.hpp"
#include "zpl/units.hpp"

namespace zpl {

SpectralWindow SpectralWindow::band_pass(double center_nm, double width_nm) {
  if (width_nm <= 0.0) throw std::invalid_argument("SpectralWindow: band-pass width must be > 0");
  if (center_nm <= 0.0) throw std::invalid_argument("SpectralWindow: band-pass center must be > 0");
  SpectralWindow w;
  w.kind = Kind::BandPass;
  w.center_nm = center_nm;
  w.width_nm = width_nm;
  return w;
}

SpectralWindow SpectralWindow::long_pass(double cutoff_nm) {
  if (cutoff_nm <= 0.0) throw std::invalid_argument("SpectralWindow: long-pass cutoff must be > 0");
  SpectralWindow w;
  w.kind = Kind::LongPass;
  w.cutoff_nm = cutoff_nm;
  return w;
}

bool SpectralWindow::passes(double wavelength_nm) const {
  switch (kind) {
    case Kind::BandPass:
      return std::abs(wavelength_nm - center_nm) <= 0.5 * width_nm;
    case Kind::LongPass:
      return wavelength_nm > cutoff_nm;
    case Kind::AllPass:
      return true;
  }
  return true;
}

void DetectorModel::validate() const {
  if (efficiency < 0.0 || efficiency > 1.0)
    throw std::invalid_argument("DetectorModel.efficiency: must be in [0,1]");
  if (dead_time_ns < 0.0) throw std::invalid_argument("DetectorModel.dead_time: must be >= 0");
  if (jitter_sigma_ps < 0.0) throw std::invalid_argument("DetectorModel.jitter_sigma: must be >= 0");
  if (dark_rate_cps < 0.0) throw std::invalid_argument("DetectorModel.dark_rate: must be >= 0");
}

PhotonStream apply_spectral_filter(const PhotonStream& stream, const SpectralWindow& window,
                                   const MoleculeModel& molecule) {
  PhotonStream out;
  out.duration_ps = stream.duration_ps;
  out.tags.reserve(stream.tags.size());
  const auto n_lines = static_cast<std::int16_t>(molecule.lines.size());
  for (const PhotonTag& tag : stream.tags) {
    if (tag.line_index < 0) {
      out.tags.push_back(tag);  // broadband background/dark
      continue;
    }
    if (tag.line_index >= n_lines)
      throw std::invalid_argument("apply_spectral_filter: tag line_index outside molecule.lines");
    if (window.passes(molecule.lines[tag.line_index].center_nm)) out.tags.push_back(tag);
  }
  return out;
}

PhotonStream add_background(const PhotonStream& stream, double rate_cps, const SimConfig& cfg) {
  if (rate_cps < 0.0) throw std::invalid_argument("add_background: rate must be >= 0");
  if (rate_cps == 0.0) return stream;

  PhotonStream bg;
  bg.duration_ps = stream.duration_ps;
  const double mean_gap_ps = kPsPerS / rate_cps;
  bg.tags.reserve(static_cast<std::size_t>(static_cast<double>(stream.duration_ps) / mean_gap_ps * 1.01) + 16);
  Rng rng(cfg.seed);
  std::int64_t t = 0;
  for (;;) {
    t += static_cast<std::int64_t>(std::llround(rng.exponential(mean_gap_ps)));
    if (t >= bg.duration_ps) break;
    bg.tags.push_back({t, Origin::Background, -1});
  }
  return merge_streams(stream, bg);
}

PhotonStream apply_detector(const PhotonStream& stream, const DetectorModel& det,
                            const SimConfig& cfg) {
  det.validate();
  Rng rng(cfg.seed);

  PhotonStream out;
  out.duration_ps = stream.duration_ps;
  out.tags.reserve(static_cast<std::size_t>(static_cast<double>(stream.tags.size()) * det.efficiency) + 16);

  for (const PhotonTag& tag : stream.tags) {
    if (det.efficiency < 1.0 && rng.uniform() >= det.efficiency) continue;
    PhotonTag kept = tag;
    if (det.jitter_sigma_ps > 0.0) {
      kept.time_ps += static_cast<std::int64_t>(std::llround(rng.normal(det.jitter_sigma_ps)));
      if (kept.time_ps < 0 || kept.time_ps >= out.duration_ps) continue;
    }
    out.tags.push_back(kept);
  }

  if (det.dark_rate_cps > 0.0) {
    const double mean_gap_ps = kPsPerS / det.dark_rate_cps;
    std::int64_t t = 0;
    PhotonStream darks;
    darks.duration_ps = out.duration_ps;
    for (;;) {
      t += static_cast<std::int64_t>(std::llround(rng.exponential(mean_gap_ps)));
      if (t >= out.duration_ps) break;
      darks.tags.push_back({t, Origin::Dark, -1});
    }
    out = merge_streams(out, darks);
  }

  std::sort(out.tags.begin(), out.tags.end(),
            [](const PhotonTag& a, const PhotonTag& b) { return a.time_ps < b.time_ps; });

  if (det.dead_time_ns > 0.0) {
    const std::int64_t dead_ps = ns_to_ps(det.dead_time_ns);
    PhotonStream gated;
    gated.duration_ps = out.duration_ps;
    gated.tags.reserve(out.tags.size());
    std::int64_t last_kept = -dead_ps - 1;
    for (const PhotonTag& tag : out.tags) {
      if (tag.time_ps - last_kept < dead_ps) continue;
      gated.tags.push_back(tag);
      last_kept = tag.time_ps;
    }
    return gated;
  }
  return out;
}

}  // namespace zpl
