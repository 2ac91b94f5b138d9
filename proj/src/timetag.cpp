#include "zpl/timetag.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace zpl {

namespace {

constexpr char kMagic[4] = {'Z', 'P', 'L', 'T'};
constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kRecordSize = 10;

void put_u16(unsigned char* p, std::uint16_t v) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>(v >> 8);
}

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
}

void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void write_tag_file(const std::string& path, const TagFile& file) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TagIoError("write_tag_file: cannot open " + path);

  unsigned char header[kHeaderSize] = {};
  std::memcpy(header, kMagic, 4);
  put_u16(header + 4, file.version);
  put_u32(header + 6, file.resolution_ps);
  put_u16(header + 10, file.channel_count);
  os.write(reinterpret_cast<const char*>(header), kHeaderSize);

  std::vector<unsigned char> buf(file.records.size() * kRecordSize);
  unsigned char* p = buf.data();
  for (const TagRecord& rec : file.records) {
    put_u64(p, rec.time_ps);
    p[8] = rec.channel;
    p[9] = rec.origin;
    p += kRecordSize;
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw TagIoError("write_tag_file: write failed for " + path);
}

TagFile read_tag_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TagIoError("read_tag_file: cannot open " + path);

  unsigned char header[kHeaderSize];
  is.read(reinterpret_cast<char*>(header), kHeaderSize);
  if (is.gcount() != static_cast<std::streamsize>(kHeaderSize))
    throw TagIoError("read_tag_file: truncated header in " + path);
  if (std::memcmp(header, kMagic, 4) != 0)
    throw TagIoError("read_tag_file: bad magic in " + path);

  TagFile file;
  file.version = get_u16(header + 4);
  if (file.version != 1) throw TagIoError("read_tag_file: unsupported version in " + path);
  file.resolution_ps = get_u32(header + 6);
  file.channel_count = get_u16(header + 10);

  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() % kRecordSize != 0)
    throw TagIoError("read_tag_file: truncated record section in " + path);
  file.records.resize(buf.size() / kRecordSize);
  const unsigned char* p = buf.data();
  for (TagRecord& rec : file.records) {
    rec.time_ps = get_u64(p);
    rec.channel = p[8];
    rec.origin = p[9];
    p += kRecordSize;
  }
  return file;
}

void write_tag_csv(const std::string& path, const TagFile& file) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw TagIoError("write_tag_csv: cannot open " + path);
  std::fputs("time_ps,channel,origin\n", f);
  for (const TagRecord& rec : file.records)
    std::fprintf(f, "%llu,%u,%u\n", static_cast<unsigned long long>(rec.time_ps), rec.channel, rec.origin);
  std::fclose(f);
}

TagFile tag_file_from_streams(const std::vector<const PhotonStream*>& channels,
                              std::uint32_t resolution_ps) {
  TagFile file;
  file.resolution_ps = resolution_ps;
  file.channel_count = static_cast<std::uint16_t>(channels.size());
  std::size_t total = 0;
  for (const PhotonStream* s : channels) total += s->tags.size();
  file.records.reserve(total);
  for (std::size_t ch = 0; ch < channels.size(); ++ch)
    for (const PhotonTag& tag : channels[ch]->tags)
      file.records.push_back({static_cast<std::uint64_t>(tag.time_ps), static_cast<std::uint8_t>(ch),
                              static_cast<std::uint8_t>(tag.origin)});
  std::stable_sort(file.records.begin(), file.records.end(),
                   [](const TagRecord& a, const TagRecord& b) { return a.time_ps < b.time_ps; });
  return file;
}

std::vector<PhotonStream> streams_from_tag_file(const TagFile& file) {
  std::vector<PhotonStream> out(file.channel_count);
  std::int64_t max_time = 0;
  for (const TagRecord& rec : file.records) {
    if (rec.channel >= file.channel_count)
      throw TagIoError("streams_from_tag_file: record channel outside header channel_count");
    out[rec.channel].tags.push_back({static_cast<std::int64_t>(rec.time_ps),
                                     static_cast<Origin>(rec.origin),
                                     static_cast<std::int16_t>(-1)});
    max_time = std::max(max_time, static_cast<std::int64_t>(rec.time_ps));
  }
  for (PhotonStream& s : out) s.duration_ps = max_time + 1;
  return out;
}

}  // namespace zpl
