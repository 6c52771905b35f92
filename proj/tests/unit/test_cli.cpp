#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "amsort/commands.hpp"
#include "amsort/error.hpp"
#include "helpers.hpp"

using namespace amsort;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(AMSORT_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("synth then self-evaluation scores perfectly") {
    const auto dir = testing::temp_dir("cli_self");
    const auto p = config::toy_profile();
    cli::cmd_synth("dance-toy", dir / "data", 3, p.dims);
    const auto reps = cli::cmd_eval(dir / "data", dir / "data" / "dance-toy" / "gt", p, dir / "report");
    // no <seq>.txt there, so every sequence scores as empty
    std::filesystem::create_directories(dir / "res");
    std::filesystem::copy_file(dir / "data/dance-toy/gt/gt.txt", dir / "res/dance-toy.txt");
    const auto ok = cli::cmd_eval(dir / "data", dir / "res", p, dir / "report");
    CHECK(reps.back().report.mota == 0.0);
    CHECK(ok.back().sequence == "COMBINED");
    CHECK(ok.front().report.mota == 1.0);
    CHECK(ok.front().report.idf1 == 1.0);
    CHECK(slurp(dir / "report/report.csv").rfind("sequence,mota,idf1,idsw,fp,fn,gt\ndance-toy,1.000000", 0) == 0);
  }

  TEST_CASE("kalman tracking end to end through the library") {
    const auto dir = testing::temp_dir("cli_kf");
    auto p = config::toy_profile();
    p.predictor = config::PredictorKind::Kalman;
    cli::cmd_synth("linear", dir / "data", 1, p.dims);
    cli::cmd_track(dir / "data", nullptr, p, dir / "res");
    const auto reps = cli::cmd_eval(dir / "data", dir / "res", p, std::nullopt);
    CHECK(reps.back().report.idf1 > 0.9);
    p.predictor = config::PredictorKind::Transformer;
    CHECK_THROWS_AS(cli::cmd_track(dir / "data", nullptr, p, dir / "res"), UsageError);
    CHECK_THROWS_AS(cli::load_model(dir / "missing.ckpt", p), UsageError);
    CHECK_THROWS_AS(cli::list_sequences(dir / "nowhere", "gt/gt.txt"), UsageError);
    CHECK_THROWS_AS(cli::list_sequences(dir / "res", "gt/gt.txt"), DataError);
  }

  TEST_CASE("exit codes") {
    const auto dir = testing::temp_dir("cli_exit");
    const auto d = dir.string();
    CHECK(run("synth linear --out " + d + "/data --seed 2") == 0);
    CHECK(run("track " + d + "/data --out " + d + "/res --predictor kalman") == 0);
    CHECK(run("eval " + d + "/data " + d + "/res --out " + d + "/rep") == 0);
    CHECK(std::filesystem::exists(dir / "rep/report.txt"));
    // missing checkpoint
    CHECK(run("track " + d + "/data --out " + d + "/res2 --checkpoint " + d + "/none.ckpt") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("track " + d + "/data --out " + d + "/r --predictor lstm") == 1);
    CHECK(run("profile --profile nope.cfg") == 1);
    // malformed data
    {
      std::ofstream f(dir / "data/linear/det/det.txt", std::ios::app);
      f << "5,-1,1,2,oops,4,0.9\n";
    }
    CHECK(run("track " + d + "/data --out " + d + "/res3 --predictor kalman") == 2);
    // corrupt checkpoint
    {
      std::ofstream f(dir / "bad.ckpt", std::ios::binary);
      f << "garbage";
    }
    CHECK(run("track " + d + "/data --out " + d + "/res4 --checkpoint " + d + "/bad.ckpt") == 2);
  }

  TEST_CASE("profile command prints a loadable profile") {
    const auto dir = testing::temp_dir("cli_prof");
    const std::string out = (dir / "p.cfg").string();
    CHECK(std::system((std::string(AMSORT_CLI) + " profile --profile paper --seed 5 --cost-profile iou > " + out).c_str()) == 0);
    const auto p = config::load_profile(out);
    CHECK(p.train.seed == 5);
    CHECK(p.assoc.weights.l1 == 0.0);
    CHECK(p.model.d == 512);
  }
}
