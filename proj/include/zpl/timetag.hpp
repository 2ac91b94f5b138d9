#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "zpl/stream.hpp"

namespace zpl {

/// One record of the ZPLT tag format: 10 bytes little-endian on disk.
struct TagRecord {
  std::uint64_t time_ps = 0;
  std::uint8_t channel = 0;
  std::uint8_t origin = 0;

  friend bool operator==(const TagRecord&, const TagRecord&) = default;
};

/// In-memory image of a .zplt file. Layout on disk:
///   16-byte header: magic "ZPLT", version u16, resolution_ps u32,
///                   channel_count u16, 4 reserved zero bytes
///   then packed 10-byte records, time-ordered.
struct TagFile {
  std::uint16_t version = 1;
  std::uint32_t resolution_ps = 1;
  std::uint16_t channel_count = 1;
  std::vector<TagRecord> records;
};

struct TagIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_tag_file(const std::string& path, const TagFile& file);
TagFile read_tag_file(const std::string& path);

/// Debug CSV twin of the binary format: header row, then time_ps,channel,origin.
void write_tag_csv(const std::string& path, const TagFile& file);

/// Merge per-channel streams into one time-ordered tag file.
TagFile tag_file_from_streams(const std::vector<const PhotonStream*>& channels,
                              std::uint32_t resolution_ps);

/// Split a tag file back into per-channel streams (times stay as recorded).
std::vector<PhotonStream> streams_from_tag_file(const TagFile& file);

}  // namespace zpl
