#pragma once

#include <cstdint>
#include <vector>

namespace zpl {

enum class Origin : std::uint8_t {
  Zpl = 0,
  RedShifted = 1,
  Background = 2,
  Dark = 3,
};

struct PhotonTag {
  std::int64_t time_ps = 0;
  Origin origin = Origin::Zpl;
  std::int16_t line_index = -1;  // index into MoleculeModel.lines, -1 if none

  friend bool operator==(const PhotonTag&, const PhotonTag&) = default;
};

/// Ordered photon time tags over an observation window [0, duration_ps).
/// Times are nondecreasing integer picoseconds.
struct PhotonStream {
  std::vector<PhotonTag> tags;
  std::int64_t duration_ps = 0;

  std::size_t size() const { return tags.size(); }
  bool empty() const { return tags.empty(); }

  /// Mean detected rate in counts/s.
  double rate_cps() const {
    return duration_ps > 0 ? static_cast<double>(tags.size()) * 1e12 / static_cast<double>(duration_ps)
                           : 0.0;
  }

  bool is_sorted() const;
  /// Throws std::logic_error if ordering or window invariants are broken.
  void check_invariants() const;
};

/// Merge two sorted streams into one sorted stream (same window).
PhotonStream merge_streams(const PhotonStream& a, const PhotonStream& b);

}  // namespace zpl
