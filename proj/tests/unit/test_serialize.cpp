#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "fixtures.hpp"
#include "jointnlu/error.hpp"
#include "jointnlu/serialize.hpp"

using namespace jointnlu;

namespace {

ParameterContainer sample() {
  ParameterContainer c;
  c.metadata["format"] = "test";
  c.metadata["empty"] = "";
  c.arrays.push_back({"a", {2, 3}, {1.5, -2, 3e-300, 4, std::numeric_limits<double>::max(), 0}});
  c.arrays.push_back({"b", {1}, {0.1}});
  c.arrays.push_back({"scalar_like", {}, {42}});
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes;
}

}  // namespace

TEST_CASE("float64 round trip is bit exact") {
  const auto dir = testing::fresh_temp_dir("serialize_f64");
  const auto c = sample();
  c.write(dir / "p.bin");
  const auto r = ParameterContainer::read(dir / "p.bin");
  CHECK(r.metadata == c.metadata);
  REQUIRE(r.arrays.size() == c.arrays.size());
  for (std::size_t i = 0; i < c.arrays.size(); ++i) {
    CHECK(r.arrays[i].name == c.arrays[i].name);
    CHECK(r.arrays[i].shape == c.arrays[i].shape);
    CHECK(r.arrays[i].values == c.arrays[i].values);
  }
  CHECK(r.find("b") != nullptr);
  CHECK(r.find("missing") == nullptr);
}

TEST_CASE("float32 storage rounds each value to single precision") {
  const auto dir = testing::fresh_temp_dir("serialize_f32");
  ParameterContainer c;
  c.arrays.push_back({"x", {3}, {0.1, -1.0 / 3.0, 1e10}});
  c.write(dir / "p.bin", ElementType::kFloat32);
  const auto r = ParameterContainer::read(dir / "p.bin");
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.arrays[0].values[i] == static_cast<double>(static_cast<float>(c.arrays[0].values[i])));
  }
}

TEST_CASE("header starts with the magic and version") {
  const auto dir = testing::fresh_temp_dir("serialize_header");
  sample().write(dir / "p.bin");
  const auto bytes = slurp(dir / "p.bin");
  CHECK(bytes.substr(0, 8) == "JNLUPARM");
  CHECK(static_cast<unsigned char>(bytes[8]) == ParameterContainer::kVersion);
}

TEST_CASE("corrupt files raise FormatError") {
  const auto dir = testing::fresh_temp_dir("serialize_corrupt");
  sample().write(dir / "good.bin");
  const auto bytes = slurp(dir / "good.bin");

  spit(dir / "magic.bin", "XXXXXXXX" + bytes.substr(8));
  CHECK_THROWS_AS(ParameterContainer::read(dir / "magic.bin"), FormatError);

  auto version = bytes;
  version[8] = 9;
  spit(dir / "version.bin", version);
  CHECK_THROWS_WITH_AS(ParameterContainer::read(dir / "version.bin"),
                       doctest::Contains("version"), FormatError);

  for (std::size_t cut : {std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    spit(dir / "truncated.bin", bytes.substr(0, cut));
    CHECK_THROWS_AS(ParameterContainer::read(dir / "truncated.bin"), FormatError);
  }

  spit(dir / "trailing.bin", bytes + "x");
  CHECK_THROWS_AS(ParameterContainer::read(dir / "trailing.bin"), FormatError);

  CHECK_THROWS(ParameterContainer::read(dir / "does_not_exist.bin"));
}

TEST_CASE("duplicate array names are rejected") {
  const auto dir = testing::fresh_temp_dir("serialize_dup");
  ParameterContainer c;
  c.arrays.push_back({"a", {1}, {1}});
  c.arrays.push_back({"a", {1}, {2}});
  CHECK_THROWS(c.write(dir / "p.bin"));
}
