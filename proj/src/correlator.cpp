#include "zpl/correlator.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "zpl/random.hpp"

namespace zpl {

namespace {

void require_sorted(const PhotonStream& s, const char* what) {
  if (!s.is_sorted()) throw std::invalid_argument(std::string(what) + ": input stream not sorted");
}

std::size_t bin_count(std::int64_t tau_min, std::int64_t tau_max, std::int64_t width) {
  if (width < 1) throw std::invalid_argument("histogram: bin_width must be >= 1 ps");
  if (tau_max <= tau_min) throw std::invalid_argument("histogram: tau_max must exceed tau_min");
  return static_cast<std::size_t>((tau_max - tau_min + width - 1) / width);
}

// Bins are [lo, lo+w) on the positive side and (lo, lo+w] on the negative
// side: an edge delay rounds toward zero. With a symmetric range whose bin
// width divides tau_max this makes bins exact mirror sets, so pair symmetry
// holds to the count.
inline void deposit(CoincidenceHistogram& h, std::int64_t delay) {
  std::int64_t offset = delay - h.tau_min_ps;
  if (delay < 0 && offset % h.bin_width_ps == 0) --offset;
  if (offset < 0) return;  // open edge at a negative tau_min
  auto idx = static_cast<std::size_t>(offset / h.bin_width_ps);
  if (idx >= h.counts.size()) idx = h.counts.size() - 1;  // delay == tau_max
  ++h.counts[idx];
}

/// First-stop delays from each start, deposited through `place`.
template <typename Place>
void scan_first_stops(const std::vector<PhotonTag>& starts, const std::vector<PhotonTag>& stops,
                      std::int64_t tau_max, Place place) {
  std::size_t j = 0;
  for (const PhotonTag& start : starts) {
    while (j < stops.size() && stops[j].time_ps <= start.time_ps) ++j;
    if (j == stops.size()) break;
    const std::int64_t delay = stops[j].time_ps - start.time_ps;
    if (delay <= tau_max) place(delay);
  }
}

}  // namespace

std::uint64_t CoincidenceHistogram::total_counts() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::pair<PhotonStream, PhotonStream> beamsplit(const PhotonStream& stream, double reflectance,
                                                std::uint64_t seed) {
  if (reflectance < 0.0 || reflectance > 1.0)
    throw std::invalid_argument("beamsplit: reflectance must be in [0,1]");
  Rng rng(seed);
  PhotonStream a, b;
  a.duration_ps = b.duration_ps = stream.duration_ps;
  for (const PhotonTag& tag : stream.tags) {
    if (rng.uniform() < reflectance)
      a.tags.push_back(tag);
    else
      b.tags.push_back(tag);
  }
  return {std::move(a), std::move(b)};
}

CoincidenceHistogram start_stop_histogram(const PhotonStream& starts, const PhotonStream& stops,
                                          std::int64_t bin_width_ps, std::int64_t tau_max_ps) {
  require_sorted(starts, "start_stop_histogram");
  require_sorted(stops, "start_stop_histogram");

  CoincidenceHistogram h;
  h.mode = HistogramMode::StartStop;
  h.bin_width_ps = bin_width_ps;
  h.tau_min_ps = 0;
  h.tau_max_ps = tau_max_ps;
  h.counts.assign(bin_count(0, tau_max_ps, bin_width_ps), 0);
  h.n_starts = starts.tags.size();

  scan_first_stops(starts.tags, stops.tags, tau_max_ps, [&](std::int64_t d) { deposit(h, d); });
  return h;
}

CoincidenceHistogram symmetric_start_stop_histogram(const PhotonStream& a, const PhotonStream& b,
                                                    std::int64_t bin_width_ps,
                                                    std::int64_t tau_max_ps) {
  require_sorted(a, "symmetric_start_stop_histogram");
  require_sorted(b, "symmetric_start_stop_histogram");

  CoincidenceHistogram h;
  h.mode = HistogramMode::StartStop;
  h.bin_width_ps = bin_width_ps;
  h.tau_min_ps = -tau_max_ps;
  h.tau_max_ps = tau_max_ps;
  h.counts.assign(bin_count(-tau_max_ps, tau_max_ps, bin_width_ps), 0);
  h.n_starts = a.tags.size() + b.tags.size();

  scan_first_stops(a.tags, b.tags, tau_max_ps, [&](std::int64_t d) { deposit(h, d); });
  scan_first_stops(b.tags, a.tags, tau_max_ps, [&](std::int64_t d) { deposit(h, -d); });
  return h;
}

CoincidenceHistogram full_correlation_histogram(const PhotonStream& a, const PhotonStream& b,
                                                std::int64_t bin_width_ps, std::int64_t tau_min_ps,
                                                std::int64_t tau_max_ps) {
  require_sorted(a, "full_correlation_histogram");
  require_sorted(b, "full_correlation_histogram");

  CoincidenceHistogram h;
  h.mode = HistogramMode::Full;
  h.bin_width_ps = bin_width_ps;
  h.tau_min_ps = tau_min_ps;
  h.tau_max_ps = tau_max_ps;
  h.counts.assign(bin_count(tau_min_ps, tau_max_ps, bin_width_ps), 0);
  h.n_starts = a.tags.size();

  std::size_t lo = 0;
  for (const PhotonTag& ta : a.tags) {
    const std::int64_t lo_time = ta.time_ps + tau_min_ps;
    const std::int64_t hi_time = ta.time_ps + tau_max_ps;
    while (lo < b.tags.size() && b.tags[lo].time_ps < lo_time) ++lo;
    for (std::size_t j = lo; j < b.tags.size() && b.tags[j].time_ps < hi_time; ++j)
      deposit(h, b.tags[j].time_ps - ta.time_ps);
  }
  return h;
}

PeakTable peak_areas(const CoincidenceHistogram& hist, std::int64_t rep_period_ps,
                     std::int64_t window_ps, int lateral_peaks) {
  if (rep_period_ps <= 0) throw std::invalid_argument("peak_areas: rep_period must be > 0");
  if (window_ps <= 0) throw std::invalid_argument("peak_areas: window must be > 0");
  if (window_ps > rep_period_ps)
    throw std::invalid_argument("peak_areas: window overlaps adjacent peaks");
  if (lateral_peaks < 1) throw std::invalid_argument("peak_areas: lateral_peaks must be >= 1");

  const double half = 0.5 * static_cast<double>(window_ps);
  const auto fits = [&](int k) {
    const double c = static_cast<double>(k) * static_cast<double>(rep_period_ps);
    return c - half >= static_cast<double>(hist.tau_min_ps) &&
           c + half <= static_cast<double>(hist.tau_max_ps);
  };

  int k_lo = static_cast<int>(std::floor(static_cast<double>(hist.tau_min_ps) / static_cast<double>(rep_period_ps)));
  int k_hi = static_cast<int>(std::ceil(static_cast<double>(hist.tau_max_ps) / static_cast<double>(rep_period_ps)));
  while (k_lo <= k_hi && !fits(k_lo)) ++k_lo;
  while (k_hi >= k_lo && !fits(k_hi)) --k_hi;
  if (k_lo > 0 || k_hi < 0)
    throw std::invalid_argument("peak_areas: histogram range does not cover the central peak");

  PeakTable table;
  for (int k = k_lo; k <= k_hi; ++k)
    table.peaks.push_back({k, static_cast<double>(k) * static_cast<double>(rep_period_ps), 0});

  for (std::size_t i = 0; i < hist.n_bins(); ++i) {
    const double c = hist.bin_center_ps(i);
    const int k = static_cast<int>(std::llround(c / static_cast<double>(rep_period_ps)));
    if (k < k_lo || k > k_hi) continue;
    if (std::abs(c - static_cast<double>(k) * static_cast<double>(rep_period_ps)) <= half)
      table.peaks[static_cast<std::size_t>(k - k_lo)].area += hist.counts[i];
  }

  const std::uint64_t central = table.peaks[static_cast<std::size_t>(-k_lo)].area;
  double lateral_sum = 0.0;
  int lateral_n = 0;
  for (const PeakEntry& p : table.peaks) {
    if (p.index != 0 && std::abs(p.index) <= lateral_peaks) {
      lateral_sum += static_cast<double>(p.area);
      ++lateral_n;
    }
  }
  if (lateral_n == 0) throw std::invalid_argument("peak_areas: no lateral peaks inside histogram range");
  const double lateral_mean = lateral_sum / lateral_n;
  table.lateral_peaks_used = lateral_n;
  table.central_to_lateral_ratio =
      lateral_mean > 0.0 ? static_cast<double>(central) / lateral_mean : (central > 0 ? HUGE_VAL : 0.0);
  return table;
}

}  // namespace zpl
