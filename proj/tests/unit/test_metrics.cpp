#include <doctest.h>

#include "amsort/error.hpp"
#include "amsort/metrics.hpp"
#include "amsort/synth.hpp"
#include "helpers.hpp"

using namespace amsort;
using namespace amsort::metrics;

namespace {

Observation ob(int f, int id, double cx, double cy) { return {f, id, BBox{cx, cy, 0.1, 0.1}, 1.0}; }

// Two objects far apart over 3 frames.
Sequence two_objects() {
  Sequence s;
  for (int f = 1; f <= 3; ++f) {
    s.push_back(ob(f, 1, 0.2 + 0.01 * f, 0.3));
    s.push_back(ob(f, 2, 0.7 - 0.01 * f, 0.6));
  }
  return s;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("perfect hypothesis") {
    const auto gt = two_objects();
    const auto r = evaluate(gt, gt);
    CHECK(r.mota == 1.0);
    CHECK(r.idf1 == 1.0);
    CHECK(r.id_switches == 0);
    CHECK(r.gt_count == 6);
  }

  TEST_CASE("empty hypothesis") {
    const auto r = evaluate(two_objects(), {});
    CHECK(r.mota == 0.0);
    CHECK(r.fn == 6);
    CHECK(r.idf1 == 0.0);
  }

  TEST_CASE("empty ground truth conventions") {
    CHECK(evaluate({}, {}).mota == 1.0);
    CHECK(evaluate({}, {}).idf1 == 1.0);
    const auto r = evaluate({}, two_objects());
    CHECK(r.fp == 6);
    CHECK(r.idf1 == 0.0);
  }

  TEST_CASE("identity swap after frame 2") {
    const auto gt = two_objects();
    auto hyp = gt;
    for (auto& o : hyp) {
      if (o.frame == 3) o.id = 3 - o.id;
      o.id += 10;
    }
    const auto d = evaluate_detailed(gt, hyp);
    CHECK(d.report.id_switches == 2);
    CHECK(d.report.idtp == 4);
    CHECK(d.report.idfp == 2);
    CHECK(d.report.idfn == 2);
    CHECK(d.report.idf1 == doctest::Approx(8.0 / 12.0).epsilon(1e-15));
    CHECK(d.report.mota == doctest::Approx(1.0 - 2.0 / 6.0).epsilon(1e-15));
    CHECK(d.matches.at(3).at(1) == 12);
  }

  TEST_CASE("carry-over keeps a still-valid correspondence") {
    // gt 1 is covered by two hypotheses; the frame-1 pair is kept even when
    // the other hypothesis overlaps more in frame 2.
    Sequence gt{ob(1, 1, 0.5, 0.5), ob(2, 1, 0.5, 0.5)};
    Sequence hyp{ob(1, 5, 0.5, 0.5), {2, 5, BBox{0.51, 0.5, 0.1, 0.1}, 1.0}, ob(2, 6, 0.5, 0.5)};
    const auto d = evaluate_detailed(gt, hyp);
    CHECK(d.report.id_switches == 0);
    CHECK(d.matches.at(2).at(1) == 5);
    CHECK(d.report.fp == 1);
  }

  TEST_CASE("match gate") {
    Sequence gt{ob(1, 1, 0.5, 0.5)};
    Sequence hyp{{1, 4, BBox{0.53, 0.5, 0.1, 0.1}, 1.0}};  // IoU 7/13
    CHECK(evaluate(gt, hyp, 0.5).fn == 0);
    CHECK(evaluate(gt, hyp, 0.6).fn == 1);
    CHECK(evaluate(gt, hyp, 0.6).fp == 1);
  }

  TEST_CASE("self-evaluation of generated scenarios") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto g = synth::generate(synth::dance_toy(seed));
      const auto r = evaluate(g.ground_truth, g.ground_truth);
      CHECK(r.mota == 1.0);
      CHECK(r.idf1 == 1.0);
      CHECK(r.id_switches == 0);
    }
  }

  TEST_CASE("scores are monotone in the match threshold") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 0.02);
    const auto g = synth::generate(synth::dance_toy(9));
    Sequence hyp;
    for (auto o : g.ground_truth) {
      if (o.frame > 120) break;
      o.box.cx += n(rng);
      o.box.cy += n(rng);
      if (o.frame > 60 && o.id < 3) o.id = 3 - o.id;
      hyp.push_back(o);
    }
    const std::vector<double> th{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const auto rows = iou_threshold_sweep(g.ground_truth, hyp, th);
    REQUIRE(rows.size() == th.size());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].report.idf1 <= rows[i - 1].report.idf1 + 1e-12);
      CHECK(rows[i].report.mota <= rows[i - 1].report.mota + 1e-12);
    }
    for (const auto& r : iou_threshold_sweep(g.ground_truth, g.ground_truth, th)) CHECK(r.report.idf1 == 1.0);
    CHECK_THROWS_AS(iou_threshold_sweep(hyp, hyp, {0.5, 0.4}), UsageError);
    CHECK_THROWS_AS(iou_threshold_sweep(hyp, hyp, {0.0}), UsageError);
  }

  TEST_CASE("MOTA invariant and IDF1 range on random hypotheses") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::uniform_int_distribution<int> id(1, 5);
    for (int trial = 0; trial < 50; ++trial) {
      Sequence gt, hyp;
      for (int f = 1; f <= 10; ++f) {
        for (int k = 1; k <= 3; ++k) gt.push_back(ob(f, k, u(rng), u(rng)));
        for (int k = 0; k < 3; ++k) {
          const int h = id(rng);
          bool dup = false;
          for (const auto& o : hyp) dup |= o.frame == f && o.id == h;
          if (!dup) hyp.push_back(ob(f, h, u(rng), u(rng)));
        }
      }
      sort_sequence(hyp);
      const auto r = evaluate(gt, hyp, 0.1);
      CHECK(r.mota == doctest::Approx(1.0 - double(r.fp + r.fn + r.id_switches) / r.gt_count));
      CHECK(r.idf1 >= 0.0);
      CHECK(r.idf1 <= 1.0);
      CHECK(r.idtp + r.idfn == r.gt_count);
    }
  }

  TEST_CASE("combine and reports") {
    const auto gt = two_objects();
    std::vector<NamedReport> reps{{"a", evaluate(gt, gt)}, {"b", evaluate(gt, {})}};
    const auto c = combine(reps);
    CHECK(c.gt_count == 12);
    CHECK(c.fn == 6);
    CHECK(c.mota == doctest::Approx(0.5));
    CHECK(c.idf1 == doctest::Approx(12.0 / 18.0));
    const auto csv = report_csv(reps);
    CHECK(csv.rfind("sequence,mota,idf1,idsw,fp,fn,gt\na,1.000000,1.000000,0,0,0,6\n", 0) == 0);
    CHECK(report_text(reps).find("IDF1") != std::string::npos);
  }
}
