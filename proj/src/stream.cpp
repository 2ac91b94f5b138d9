#include "zpl/stream.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace zpl {

bool PhotonStream::is_sorted() const {
  return std::is_sorted(tags.begin(), tags.end(),
                        [](const PhotonTag& a, const PhotonTag& b) { return a.time_ps < b.time_ps; });
}

void PhotonStream::check_invariants() const {
  if (!is_sorted()) throw std::logic_error("PhotonStream: tags not time-ordered");
  if (!tags.empty()) {
    if (tags.front().time_ps < 0) throw std::logic_error("PhotonStream: negative time tag");
    if (tags.back().time_ps >= duration_ps)
      throw std::logic_error("PhotonStream: tag at " + std::to_string(tags.back().time_ps) +
                             " ps outside window of " + std::to_string(duration_ps) + " ps");
  }
}

PhotonStream merge_streams(const PhotonStream& a, const PhotonStream& b) {
  PhotonStream out;
  out.duration_ps = std::max(a.duration_ps, b.duration_ps);
  out.tags.resize(a.tags.size() + b.tags.size());
  std::merge(a.tags.begin(), a.tags.end(), b.tags.begin(), b.tags.end(), out.tags.begin(),
             [](const PhotonTag& x, const PhotonTag& y) { return x.time_ps < y.time_ps; });
  return out;
}

}  // namespace zpl
