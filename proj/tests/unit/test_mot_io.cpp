#include <doctest.h>

#include <fstream>

#include "amsort/error.hpp"
#include "amsort/mot_io.hpp"
#include "amsort/synth.hpp"
#include "helpers.hpp"

using namespace amsort;
using namespace amsort::io;

TEST_SUITE("mot_io") {
  TEST_CASE("parse the reference line") {
    const auto r = parse_mot_line("1,2,100.00,200.00,50.00,80.00,0.900000");
    CHECK(r.frame == 1);
    CHECK(r.id == 2);
    CHECK(r.box.left == 100.0);
    CHECK(r.box.top == 200.0);
    CHECK(r.box.left + r.box.width == 150.0);
    CHECK(r.box.top + r.box.height == 280.0);
    CHECK(r.confidence == 0.9);
  }

  TEST_CASE("detection ids and world fields") {
    const auto r = parse_mot_line("3,-1,1.5,2.5,3.5,4.5,0.75,-1,-1,-1");
    CHECK(r.id == -1);
    CHECK(r.box.height == 4.5);
    CHECK(parse_mot_line(" 4 , 7 ,1,2,3,4,1\r").id == 7);
  }

  TEST_CASE("malformed lines name the field") {
    try {
      parse_mot_line("1,2,abc,200,50,80,0.9");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("field 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_mot_line("1,2,3,4,5,6"), DataError);
    CHECK_THROWS_AS(parse_mot_line("1,2,3,4,5,6,7,8"), DataError);
    CHECK_THROWS_AS(parse_mot_line("0,2,3,4,5,6,7"), DataError);
    CHECK_THROWS_AS(parse_mot_line("1,0,3,4,5,6,7"), DataError);
    CHECK_THROWS_AS(parse_mot_line("1,-2,3,4,5,6,7"), DataError);
    CHECK_THROWS_AS(parse_mot_line("1,2,3,4,-5,6,7"), DataError);
    CHECK_THROWS_AS(parse_mot_line("1.5,2,3,4,5,6,7"), DataError);
  }

  TEST_CASE("emitter precision") {
    CHECK(format_mot_line({1, 2, {100, 200, 50, 80}, 0.9}) == "1,2,100.00,200.00,50.00,80.00,0.900000");
    CHECK(format_mot_line({12, -1, {1.234, 5.678, 9.999, 0.001}, 0.1234567}) ==
          "12,-1,1.23,5.68,10.00,0.00,0.123457");
  }

  TEST_CASE("emit(parse(line)) reproduces accepted lines") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> px(0, 2000), c(0, 1);
    for (int i = 0; i < 500; ++i) {
      const MotRecord r{i + 1, i % 2 ? -1 : i + 1, {px(rng), px(rng), px(rng), px(rng)}, c(rng)};
      const auto line = format_mot_line(r);
      CHECK(format_mot_line(parse_mot_line(line)) == line);
    }
  }

  TEST_CASE("file errors carry the line number") {
    const auto dir = testing::temp_dir("motio");
    {
      std::ofstream f(dir / "x.txt");
      f << "1,1,1,1,1,1,1\n\n2,1,1,1,1,x,1\n";
    }
    try {
      read_mot_file(dir / "x.txt");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("x.txt:3:") != std::string::npos);
      CHECK(std::string(e.what()).find("field 6") != std::string::npos);
    }
    CHECK_THROWS_AS(read_mot_file(dir / "missing.txt"), DataError);
  }

  TEST_CASE("write then read equals the quantized sequence") {
    const auto g = synth::generate(synth::dance_toy(2));
    const ImageDims dims;
    const auto dir = testing::temp_dir("motio_rt");
    write_mot_file(dir / "gt.txt", to_records(g.ground_truth, dims));
    const auto back = to_sequence(read_mot_file(dir / "gt.txt"), dims);
    CHECK(back == quantize(g.ground_truth, dims));
    REQUIRE(back.size() == g.ground_truth.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(std::abs(back[i].box.cx - g.ground_truth[i].box.cx) <= 0.01 / dims.width);
      CHECK(back[i].frame == g.ground_truth[i].frame);
      CHECK(back[i].id == g.ground_truth[i].id);
    }
  }
}
