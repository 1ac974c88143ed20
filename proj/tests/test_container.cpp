#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gcap/common.hpp"
#include "gcap/container.hpp"

using namespace gcap;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

fs::path tmp_file(const char* name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_SUITE("container") {

TEST_CASE("minimal file is the 16-byte header plus an empty index") {
  const fs::path file = tmp_file("gcap_minimal.gcap");
  FeatureContainer c(0);
  c.save(file);
  const std::string bytes = read_bytes(file);
  CHECK(bytes.size() == 20);  // header + u32 index count of 0
  CHECK(bytes.substr(0, 4) == "GCAP");
  const FeatureContainer loaded = FeatureContainer::load(file);
  CHECK(loaded.rows() == 0);
  CHECK(loaded.index().empty());
  fs::remove(file);
}

TEST_CASE("random tensor round-trips bit-identically") {
  RandomStream rng(3);
  std::vector<float> data(100 * 64);
  for (auto& v : data) v = static_cast<float>(rng.next_uniform(-10, 10));

  FeatureContainer c(64);
  c.add_tensor("features", data, 100);
  const fs::path f1 = tmp_file("gcap_rt1.gcap");
  const fs::path f2 = tmp_file("gcap_rt2.gcap");
  c.save(f1);

  const FeatureContainer loaded = FeatureContainer::load(f1);
  CHECK(loaded.rows() == 100);
  CHECK(loaded.cols() == 64);
  const auto span = loaded.tensor("features");
  REQUIRE(span.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(std::memcmp(&span[i], &data[i], 4) == 0);  // bit-for-bit
  }
  loaded.save(f2);
  CHECK(read_bytes(f1) == read_bytes(f2));
  fs::remove(f1);
  fs::remove(f2);
}

TEST_CASE("bad magic and version are rejected") {
  const fs::path file = tmp_file("gcap_bad.gcap");
  FeatureContainer c(2);
  const std::vector<float> row = {1, 2};
  c.add_tensor("x", row, 1);
  c.save(file);

  std::string bytes = read_bytes(file);
  std::string corrupt = bytes;
  corrupt[0] = 'X';
  write_bytes(file, corrupt);
  CHECK_THROWS_WITH_AS(FeatureContainer::load(file), doctest::Contains("magic"),
                       ValidationError);

  corrupt = bytes;
  corrupt[4] = 9;  // version
  write_bytes(file, corrupt);
  CHECK_THROWS_WITH_AS(FeatureContainer::load(file), doctest::Contains("version"),
                       ValidationError);
  fs::remove(file);
}

TEST_CASE("truncated payload is rejected with a diagnostic") {
  const fs::path file = tmp_file("gcap_trunc.gcap");
  FeatureContainer c(4);
  const std::vector<float> data = {1, 2, 3, 4, 5, 6, 7, 8};
  c.add_tensor("x", data, 2);
  c.save(file);

  const std::string bytes = read_bytes(file);
  write_bytes(file, bytes.substr(0, 16 + 3 * 4));  // header + 3 of 8 floats
  CHECK_THROWS_WITH_AS(FeatureContainer::load(file), doctest::Contains("truncated"),
                       ValidationError);
  fs::remove(file);
}

TEST_CASE("index entries past the payload name the offending tensor") {
  const fs::path file = tmp_file("gcap_oob.gcap");
  // hand-built file: 1x1 payload, index entry claiming 2 rows
  std::string bytes;
  auto u32 = [&bytes](uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  bytes += "GCAP";
  u32(1);  // version
  u32(1);  // rows
  u32(1);  // cols
  u32(0);  // one float payload (bits of 0.0f)
  u32(1);  // index count
  u32(3);
  bytes += "oob";
  u32(0);  // row offset
  u32(2);  // rows (past payload)
  write_bytes(file, bytes);
  CHECK_THROWS_WITH_AS(FeatureContainer::load(file), doctest::Contains("oob"), ValidationError);
  fs::remove(file);
}

TEST_CASE("overlapping index entries are rejected") {
  const fs::path file = tmp_file("gcap_overlap.gcap");
  std::string bytes;
  auto u32 = [&bytes](uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  bytes += "GCAP";
  u32(1);
  u32(2);  // rows
  u32(1);  // cols
  u32(0);
  u32(0);  // 2x1 payload
  u32(2);  // index count
  u32(1);
  bytes += "a";
  u32(0);
  u32(2);
  u32(1);
  bytes += "b";
  u32(1);
  u32(1);  // overlaps row 1
  write_bytes(file, bytes);
  CHECK_THROWS_WITH_AS(FeatureContainer::load(file), doctest::Contains("overlap"),
                       ValidationError);
  fs::remove(file);
}

TEST_CASE("add_tensor validates sizes and duplicate names") {
  FeatureContainer c(3);
  const std::vector<float> row = {1, 2, 3};
  c.add_tensor("x", row, 1);
  CHECK_THROWS_AS(c.add_tensor("y", row, 2), ValidationError);
  CHECK_THROWS_AS(c.add_tensor("x", row, 1), ValidationError);
  CHECK_THROWS_AS(c.tensor("missing"), ValidationError);
}

}  // TEST_SUITE
