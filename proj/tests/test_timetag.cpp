#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "zpl/correlator.hpp"
#include "zpl/emission.hpp"
#include "zpl/timetag.hpp"

using namespace zpl;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("timetag");

namespace {

fs::path temp_file(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "zplsim_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("tag file round trip") {
  const MoleculeModel mol = MoleculeModel::dbt_defaults();
  SimConfig cfg{211, 0.001, 1};
  const PhotonStream stream = simulate_cw_stream(mol, 3.5, cfg);
  auto [a, b] = beamsplit(stream, 0.5, 212);

  const TagFile out = tag_file_from_streams({&a, &b}, 1);
  CHECK(out.channel_count == 2);
  CHECK(out.records.size() == stream.size());
  for (std::size_t i = 1; i < out.records.size(); ++i)
    CHECK(out.records[i - 1].time_ps <= out.records[i].time_ps);

  const auto path = temp_file("roundtrip.zplt");
  write_tag_file(path.string(), out);
  const TagFile in = read_tag_file(path.string());
  CHECK(in.version == out.version);
  CHECK(in.resolution_ps == out.resolution_ps);
  CHECK(in.channel_count == out.channel_count);
  CHECK(in.records == out.records);

  const auto halves = streams_from_tag_file(in);
  REQUIRE(halves.size() == 2);
  CHECK(halves[0].size() == a.size());
  CHECK(halves[1].size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(halves[0].tags[i].time_ps == a.tags[i].time_ps);
}

TEST_CASE("header layout is 16 bytes and records are 10") {
  TagFile file;
  file.resolution_ps = 4;
  file.channel_count = 2;
  file.records = {{1000, 0, 0}, {2000, 1, 2}};
  const auto path = temp_file("layout.zplt");
  write_tag_file(path.string(), file);
  CHECK(fs::file_size(path) == 16 + 10 * file.records.size());

  std::ifstream is(path, std::ios::binary);
  char magic[4];
  is.read(magic, 4);
  CHECK(std::string(magic, 4) == "ZPLT");
}

TEST_CASE("corrupt files are rejected") {
  const auto path = temp_file("bad.zplt");
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE this is not a tag file";
  }
  CHECK_THROWS_AS(read_tag_file(path.string()), TagIoError);

  const auto truncated = temp_file("trunc.zplt");
  {
    TagFile file;
    file.records = {{1, 0, 0}};
    write_tag_file(truncated.string(), file);
    fs::resize_file(truncated, 16 + 5);  // cut a record in half
  }
  CHECK_THROWS_AS(read_tag_file(truncated.string()), TagIoError);
  CHECK_THROWS_AS(read_tag_file("/nonexistent/nowhere.zplt"), TagIoError);
}

TEST_CASE("csv export") {
  TagFile file;
  file.records = {{1234, 0, 0}, {5678, 1, 2}};
  const auto path = temp_file("tags.csv");
  write_tag_csv(path.string(), file);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == "time_ps,channel,origin");
  std::getline(is, line);
  CHECK(line == "1234,0,0");
  std::getline(is, line);
  CHECK(line == "5678,1,2");
}

TEST_SUITE_END();
