#include <doctest.h>

#include <cstring>

#include "amsort/checkpoint.hpp"
#include "amsort/error.hpp"
#include "helpers.hpp"

using namespace amsort;

TEST_SUITE("checkpoint") {
  TEST_CASE("byte layout of one entry") {
    const std::vector<ad::NamedArray> arrays{{"ab", {2}, {1.0, -0.5}}};
    const auto bytes = ad::encode_checkpoint(arrays);
    std::string expect = "AMSORT01";
    auto u32 = [&expect](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) expect.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    auto f64 = [&expect](double d) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, 8);
      for (int i = 0; i < 8; ++i) expect.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    };
    u32(2);
    expect += "ab";
    u32(1);
    u32(2);
    f64(1.0);
    f64(-0.5);
    CHECK(bytes == expect);
  }

  TEST_CASE("round trip through a file") {
    std::mt19937_64 rng(2);
    std::vector<ad::NamedArray> arrays{{"x", {2, 3}, testing::random_values(6, rng)},
                                       {"scalar", {}, {3.25}},
                                       {"y", {4}, testing::random_values(4, rng)}};
    const auto dir = testing::temp_dir("ckpt");
    ad::write_checkpoint(dir / "m.bin", arrays);
    const auto back = ad::read_checkpoint(dir / "m.bin");
    REQUIRE(back.size() == arrays.size());
    for (std::size_t i = 0; i < arrays.size(); ++i) {
      CHECK(back[i].name == arrays[i].name);
      CHECK(back[i].shape == arrays[i].shape);
      CHECK(back[i].values == arrays[i].values);
    }
  }

  TEST_CASE("corrupt input") {
    CHECK_THROWS_AS(ad::decode_checkpoint("NOTMAGIC"), DataError);
    auto bytes = ad::encode_checkpoint({{"w", {3}, {1, 2, 3}}});
    bytes.resize(bytes.size() - 3);
    CHECK_THROWS_AS(ad::decode_checkpoint(bytes), DataError);
    CHECK(ad::decode_checkpoint("AMSORT01").empty());
    CHECK_THROWS_AS(ad::read_checkpoint("/nonexistent/ckpt.bin"), DataError);
  }
}
