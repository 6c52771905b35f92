#include <doctest.h>

#include <set>

#include "amsort/checkpoint.hpp"
#include "amsort/training.hpp"
#include "helpers.hpp"

using namespace amsort;
using namespace amsort::train;

namespace {

Sequence track_run(int id, int first, int last, double x0 = 0.2) {
  Sequence s;
  for (int f = first; f <= last; ++f) s.push_back({f, id, BBox{x0 + 0.001 * f, 0.5, 0.1, 0.1}, 1.0});
  return s;
}

model::EncoderConfig tiny() {
  model::EncoderConfig c;
  c.d = 16;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn_dim = 32;
  c.head_hidden = 16;
  c.history = 4;
  return c;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("segment count is max(0, L - T) per run") {
    for (int len : {1, 4, 5, 9, 30}) {
      auto gt = track_run(1, 1, len);
      CHECK(segment_trajectories(gt, 4).size() == static_cast<std::size_t>(std::max(0, len - 4)));
    }
    // A gap splits the run: 1..6 and 9..12 give 2 + 0 segments.
    auto gt = track_run(1, 1, 6);
    auto tail = track_run(1, 9, 12);
    gt.insert(gt.end(), tail.begin(), tail.end());
    const auto segs = segment_trajectories(gt, 4, 3);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].history.front().cx == doctest::Approx(0.201));
    CHECK(segs[0].target.cx == doctest::Approx(0.205));
    CHECK(segs[1].sequence == 3);
    CHECK(segs[1].track_id == 1);
  }

  TEST_CASE("mask augmentation") {
    TrajectorySegment seg;
    for (int i = 0; i < 30; ++i) seg.history.push_back(BBox{0.01 * i, 0.5, 0.1, 0.1});
    std::mt19937_64 rng(1);
    CHECK(apply_mask_augmentation(seg, 0.0, rng).box_count() == 30);
    std::size_t masked = 0;
    for (int i = 0; i < 2000; ++i) masked += 30 - apply_mask_augmentation(seg, 0.1, rng).box_count();
    CHECK(static_cast<double>(masked) / (2000 * 30) == doctest::Approx(0.1).epsilon(0.1));
    // p close to 1 masks everything, then the latest slot comes back.
    for (int i = 0; i < 50; ++i) {
      const auto h = apply_mask_augmentation(seg, 0.999999, rng);
      CHECK(h.box_count() == 1);
      CHECK(h[29] == Slot(seg.history.back()));
    }
  }

  TEST_CASE("l1 loss is the mean absolute difference") {
    const auto a = ad::Tensor::constant({2, 4}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
    const auto b = ad::Tensor::constant({2, 4}, {0.2, 0.2, 0.1, 0.4, 0.5, 0.9, 0.7, 0.0});
    CHECK(l1_loss(a, b).item() == doctest::Approx((0.1 + 0.2 + 0.3 + 0.8) / 8));
  }

  TEST_CASE("identity split never shares an identity") {
    std::vector<TrajectorySegment> segs;
    for (int seq = 0; seq < 2; ++seq)
      for (int id = 1; id <= 10; ++id)
        for (auto& s : segment_trajectories(track_run(id, 1, 8), 4, seq)) segs.push_back(s);
    const auto [tr, va] = split_by_identity(segs, 0.1, 3);
    CHECK(tr.size() + va.size() == segs.size());
    std::set<std::pair<int, int>> a, b;
    for (const auto& s : tr) a.insert({s.sequence, s.track_id});
    for (const auto& s : va) b.insert({s.sequence, s.track_id});
    CHECK(b.size() == 2);
    for (const auto& id : b) CHECK(a.count(id) == 0);
    // A single identity stays in training.
    const auto one = segment_trajectories(track_run(1, 1, 8), 4);
    CHECK(split_by_identity(one, 0.5, 1).second.empty());
  }

  TEST_CASE("subsample is deterministic and bounded") {
    std::vector<TrajectorySegment> segs;
    for (int id = 1; id <= 20; ++id)
      for (auto& s : segment_trajectories(track_run(id, 1, 10), 4)) segs.push_back(s);
    const auto a = subsample(segs, 17, 5), b = subsample(segs, 17, 5);
    CHECK(a.size() == 17);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].target == b[i].target);
    CHECK(subsample(segs, 0, 5).size() == segs.size());
  }

  TEST_CASE("cosine schedule endpoints") {
    TrainConfig c;
    c.lr = 1e-3;
    c.lr_min = 1e-5;
    CHECK(c.lr_at(7, 100) == 1e-3);
    c.lr_schedule = "cosine";
    CHECK(c.lr_at(0, 100) == doctest::Approx(1e-3));
    CHECK(c.lr_at(99, 100) == doctest::Approx(1e-5));
    CHECK(c.lr_at(50, 101) == doctest::Approx(0.5 * (1e-3 + 1e-5)));
    c.lr_schedule = "step";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("paper training defaults") {
    const TrainConfig c;
    CHECK(c.lr == 1e-4);
    CHECK(c.epochs == 50);
    CHECK(c.batch_size == 512);
    CHECK(c.mask_prob == 0.1);
    CHECK_FALSE(c.clip_grad);
    CHECK(c.clip_norm == 10.0);
    CHECK(c.lr_schedule == "constant");
  }

  TEST_CASE("training lowers the loss and is bitwise reproducible") {
    std::vector<TrajectorySegment> segs;
    for (int id = 1; id <= 8; ++id)
      for (auto& s : segment_trajectories(track_run(id, 1, 20, 0.1 * id), 4)) segs.push_back(s);
    const auto mc = tiny();
    TrainConfig tc;
    tc.lr = 3e-3;
    tc.epochs = 4;
    tc.batch_size = 16;
    tc.seed = 9;
    tc.val_fraction = 0.25;
    const auto r1 = train::train(segs, model::ModelParams::init(mc, 9), mc, tc);
    const auto r2 = train::train(segs, model::ModelParams::init(mc, 9), mc, tc);
    REQUIRE(r1.trace.size() == 4);
    CHECK(r1.trace.back().mean_loss < r1.trace.front().mean_loss);
    CHECK(r1.trace.back().has_val);
    CHECK(ad::encode_checkpoint(r1.params.to_arrays()) == ad::encode_checkpoint(r2.params.to_arrays()));
    const auto csv = loss_trace_csv(r1.trace);
    CHECK(csv.rfind("epoch,mean_loss,val_loss\n1,", 0) == 0);
  }

  TEST_CASE("translate and resize augmentation") {
    TrainConfig bad;
    bad.translate = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.translate = 0.0;
    bad.resize = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    std::vector<TrajectorySegment> segs;
    for (int id = 1; id <= 6; ++id)
      for (auto& s : segment_trajectories(track_run(id, 1, 16, 0.1 * id), 4)) segs.push_back(s);
    const auto mc = tiny();
    TrainConfig tc;
    tc.lr = 3e-3;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.seed = 4;
    tc.val_fraction = 0.0;
    const auto plain = train::train(segs, model::ModelParams::init(mc, 4), mc, tc);
    tc.translate = 0.3;
    tc.resize = 0.3;
    const auto a = train::train(segs, model::ModelParams::init(mc, 4), mc, tc);
    const auto b = train::train(segs, model::ModelParams::init(mc, 4), mc, tc);
    CHECK(ad::encode_checkpoint(a.params.to_arrays()) == ad::encode_checkpoint(b.params.to_arrays()));
    CHECK(ad::encode_checkpoint(a.params.to_arrays()) != ad::encode_checkpoint(plain.params.to_arrays()));
    CHECK(std::isfinite(a.trace.back().mean_loss));
  }

  TEST_CASE("wrong history length is rejected") {
    const auto segs = segment_trajectories(track_run(1, 1, 10), 3);
    CHECK_THROWS_AS(train::train(segs, model::ModelParams::init(tiny(), 1), tiny(), TrainConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(train::train({}, model::ModelParams::init(tiny(), 1), tiny(), TrainConfig{}), std::invalid_argument);
  }

  TEST_CASE("loss csv leaves val empty without a validation split") {
    std::vector<EpochStats> t{{1, 0.5, 0.0, false}};
    CHECK(loss_trace_csv(t) == "epoch,mean_loss,val_loss\n1,0.500000000,\n");
  }
}
