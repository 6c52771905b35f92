#include <doctest.h>

#include <set>

#include "amsort/error.hpp"
#include "amsort/metrics.hpp"
#include "amsort/synth.hpp"
#include "amsort/tracker.hpp"
#include "helpers.hpp"

using namespace amsort;
using namespace amsort::track;

namespace {

model::EncoderConfig tiny(std::size_t t) {
  model::EncoderConfig c;
  c.d = 16;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn_dim = 32;
  c.head_hidden = 16;
  c.history = t;
  return c;
}

TrackerConfig config(std::size_t t) {
  TrackerConfig c;
  c.history = t;
  return c;
}

Sequence one_linear_object(int frames) {
  synth::Scenario s = synth::linear_scenario(3, 1, frames);
  return synth::generate(s).detections;
}

void check_invariants(const Tracker& tr, std::size_t t, std::set<int>& seen_ids) {
  for (const auto& k : tr.tracks()) {
    CHECK(k.history.length() == t);
    CHECK(k.history.has_box());
    CHECK(k.hits >= 0);
    CHECK(k.misses >= 0);
    CHECK_FALSE((k.hits > 0 && k.misses > 0));
    if (k.state == TrackState::Lost) CHECK(k.misses >= 1);
    seen_ids.insert(k.id);
  }
}

}  // namespace

TEST_SUITE("tracker") {
  TEST_CASE("empty input") {
    KalmanModel km;
    Tracker tr(km, config(10));
    CHECK(tr.step(1, {}).empty());
    CHECK(tr.tracks().empty());
    CHECK(run_sequence({}, km, config(10)).empty());
  }

  TEST_CASE("one detection makes one tentative track") {
    KalmanModel km;
    Tracker tr(km, config(10));
    const std::vector<Observation> d{{1, -1, BBox{0.5, 0.5, 0.1, 0.1}, 0.9}};
    CHECK(tr.step(1, d).empty());
    REQUIRE(tr.tracks().size() == 1);
    CHECK(tr.tracks()[0].state == TrackState::Tentative);
    CHECK(tr.tracks()[0].hits == 1);
    CHECK(tr.tracks()[0].history.box_count() == 1);
  }

  TEST_CASE("confidence gate drops weak detections") {
    KalmanModel km;
    Tracker tr(km, config(10));
    const std::vector<Observation> d{{1, -1, BBox{0.5, 0.5, 0.1, 0.1}, 0.39}};
    tr.step(1, d);
    CHECK(tr.tracks().empty());
  }

  TEST_CASE("frames must increase") {
    KalmanModel km;
    Tracker tr(km, config(10));
    tr.step(3, {});
    CHECK_THROWS_AS(tr.step(3, {}), DataError);
    CHECK_THROWS_AS(tr.step(2, {}), DataError);
    const std::vector<Observation> d{{9, -1, BBox{0.5, 0.5, 0.1, 0.1}, 0.9}};
    CHECK_THROWS_AS(tr.step(4, d), DataError);
  }

  TEST_CASE("single linear object gives one identity") {
    KalmanModel km;
    const auto dets = one_linear_object(60);
    const auto out = run_sequence(dets, km, config(10));
    CHECK(out.size() == 58);  // activation at the third hit
    std::set<int> ids;
    for (const auto& o : out) ids.insert(o.id);
    CHECK(ids.size() == 1);
    auto gt = synth::generate(synth::linear_scenario(3, 1, 60)).ground_truth;
    gt.erase(gt.begin(), gt.begin() + 2);
    const auto r = metrics::evaluate(gt, out);
    CHECK(r.mota == 1.0);
    CHECK(r.id_switches == 0);
  }

  TEST_CASE("unmatched tracks append a mask and age out") {
    KalmanModel km;
    auto cfg = config(10);
    cfg.lifecycle.max_age = 3;
    Tracker tr(km, cfg);
    const auto dets = one_linear_object(5);
    for (int f = 1; f <= 5; ++f) tr.step(f, std::span(dets).subspan(f - 1, 1));
    REQUIRE(tr.tracks().size() == 1);
    CHECK(tr.tracks()[0].state == TrackState::Active);
    tr.step(6, {});
    CHECK(tr.tracks()[0].state == TrackState::Lost);
    CHECK_FALSE(tr.tracks()[0].history[9].has_value());
    CHECK(tr.tracks()[0].history.box_count() == 5);
    tr.step(7, {});
    tr.step(8, {});
    CHECK(tr.tracks().size() == 1);
    tr.step(9, {});
    CHECK(tr.tracks().empty());
  }

  TEST_CASE("prediction append variant") {
    KalmanModel km;
    auto cfg = config(10);
    cfg.lifecycle.append_prediction = true;
    Tracker tr(km, cfg);
    const auto dets = one_linear_object(5);
    for (int f = 1; f <= 5; ++f) tr.step(f, std::span(dets).subspan(f - 1, 1));
    tr.step(6, {});
    const auto& t = tr.tracks()[0];
    REQUIRE(t.history[9].has_value());
    CHECK(*t.history[9] == *t.last_prediction);
  }

  TEST_CASE("a track whose history runs out of boxes is removed") {
    KalmanModel km;
    auto cfg = config(4);
    cfg.lifecycle.max_age = 30;
    Tracker tr(km, cfg);
    const auto dets = one_linear_object(1);
    tr.step(1, dets);
    for (int f = 2; f <= 4; ++f) tr.step(f, {});
    CHECK(tr.tracks().size() == 1);
    tr.step(5, {});
    CHECK(tr.tracks().empty());
  }

  TEST_CASE("pipeline invariants hold for both predictors") {
    const auto g = synth::generate(synth::dance_toy(3));
    const auto cfg_m = tiny(6);
    const auto params = model::ModelParams::init(cfg_m, 2);
    KalmanModel km;
    TransformerModel tm(params, cfg_m);
    for (MotionModel* m : {static_cast<MotionModel*>(&km), static_cast<MotionModel*>(&tm)}) {
      Tracker tr(*m, config(6));
      const auto frames = by_frame(g.detections);
      std::set<int> ids_alive, ids_out;
      std::set<std::pair<int, int>> seen;
      int max_id = 0;
      for (int f = 1; f <= 150; ++f) {
        const auto it = frames.find(f);
        const auto out = it == frames.end() ? Sequence{} : tr.step(f, it->second);
        if (it == frames.end()) tr.step(f, {});
        for (const auto& o : out) {
          CHECK(seen.insert({o.frame, o.id}).second);
          CHECK(o.frame == f);
        }
        check_invariants(tr, 6, ids_alive);
        for (const auto& k : tr.tracks()) {
          if (k.id > max_id) {
            CHECK(ids_out.count(k.id) == 0);  // ids are never reused
            max_id = k.id;
          }
          ids_out.insert(k.id);
        }
      }
    }
  }

  TEST_CASE("reruns are identical") {
    const auto g = synth::generate(synth::dance_toy(8));
    const auto cfg_m = tiny(6);
    const auto params = model::ModelParams::init(cfg_m, 5);
    TransformerModel a(params, cfg_m), b(params, cfg_m);
    CHECK(run_sequence(g.detections, a, config(6)) == run_sequence(g.detections, b, config(6)));
    KalmanModel k1, k2;
    CHECK(run_sequence(g.detections, k1, config(6)) == run_sequence(g.detections, k2, config(6)));
  }

  TEST_CASE("lifecycle validation") {
    LifecycleConfig c;
    c.min_hits = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.min_confidence = 1.5;
    CHECK_THROWS_AS(c.validate(), UsageError);
    KalmanModel km;
    CHECK_THROWS_AS(Tracker(km, config(0)), UsageError);
  }
}
