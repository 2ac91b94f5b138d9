#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "zpl/stream.hpp"

namespace zpl {

enum class HistogramMode { StartStop, Full };

/// Binned coincidence counts over [tau_min, tau_max). Bins are half-open
/// [lo, lo + bin_width) except that a delay exactly at tau_max is folded
/// into the last bin.
struct CoincidenceHistogram {
  std::int64_t bin_width_ps = 1;
  std::int64_t tau_min_ps = 0;
  std::int64_t tau_max_ps = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_starts = 0;
  HistogramMode mode = HistogramMode::StartStop;

  std::size_t n_bins() const { return counts.size(); }
  double bin_center_ps(std::size_t i) const {
    return static_cast<double>(tau_min_ps) + (static_cast<double>(i) + 0.5) * static_cast<double>(bin_width_ps);
  }
  std::uint64_t total_counts() const;
};

/// Route each tag to channel A with probability reflectance, else B.
/// The two outputs partition the input exactly.
std::pair<PhotonStream, PhotonStream> beamsplit(const PhotonStream& stream, double reflectance,
                                                std::uint64_t seed);

/// For each start, the delay to the first stop in (0, tau_max]. Starts with
/// no stop in range contribute nothing. Single forward two-pointer pass.
CoincidenceHistogram start_stop_histogram(const PhotonStream& starts, const PhotonStream& stops,
                                          std::int64_t bin_width_ps, std::int64_t tau_max_ps);

/// Two-sided start-stop over [-tau_max, +tau_max): A->B first-stop delays on
/// the positive side, B->A on the negative side (channel-swapped).
CoincidenceHistogram symmetric_start_stop_histogram(const PhotonStream& a, const PhotonStream& b,
                                                    std::int64_t bin_width_ps,
                                                    std::int64_t tau_max_ps);

/// All ordered pairs with t_b - t_a in [tau_min, tau_max); sliding-window
/// merge over the two sorted streams, O(N_a + N_b + pairs).
CoincidenceHistogram full_correlation_histogram(const PhotonStream& a, const PhotonStream& b,
                                                std::int64_t bin_width_ps, std::int64_t tau_min_ps,
                                                std::int64_t tau_max_ps);

struct PeakEntry {
  int index = 0;           // multiple of the repetition period
  double center_ps = 0.0;  // index * rep_period
  std::uint64_t area = 0;  // integrated counts in +-window/2
};

struct PeakTable {
  std::vector<PeakEntry> peaks;
  double central_to_lateral_ratio = 0.0;
  int lateral_peaks_used = 0;
};

/// Integrate counts in +-window/2 around each multiple of rep_period whose
/// window lies fully inside the histogram range. The ratio compares the
/// central area to the mean lateral area over |index| in [1, lateral_peaks].
PeakTable peak_areas(const CoincidenceHistogram& hist, std::int64_t rep_period_ps,
                     std::int64_t window_ps, int lateral_peaks = 4);

}  // namespace zpl
