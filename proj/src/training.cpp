#include "amsort/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "amsort/error.hpp"
#include "amsort/optim.hpp"

namespace amsort::train {

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("train: lr must be non-negative");
  if (!(mask_prob >= 0.0 && mask_prob < 1.0)) throw std::invalid_argument("train: mask probability must lie in [0, 1)");
  if (batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("train: val fraction must lie in [0, 1)");
  if (lr_schedule != "constant" && lr_schedule != "cosine") {
    throw std::invalid_argument("train: lr schedule must be constant or cosine");
  }
  if (!(input_noise >= 0.0)) throw std::invalid_argument("train: input noise must be non-negative");
  if (!(translate >= 0.0 && translate < 0.5)) throw std::invalid_argument("train: translate must lie in [0, 0.5)");
  if (!(resize >= 0.0 && resize < 1.0)) throw std::invalid_argument("train: resize must lie in [0, 1)");
  if (!(lr_min >= 0.0 && lr_min <= lr)) throw std::invalid_argument("train: lr_min must lie in [0, lr]");
}

double TrainConfig::lr_at(std::size_t step, std::size_t total) const {
  if (lr_schedule == "constant" || total <= 1) return lr;
  const double t = static_cast<double>(std::min(step, total - 1)) / static_cast<double>(total - 1);
  return lr_min + 0.5 * (lr - lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

std::vector<TrajectorySegment> segment_trajectories(const Sequence& gt, std::size_t t, int sequence) {
  std::vector<TrajectorySegment> out;
  if (t == 0) throw std::invalid_argument("segment_trajectories: T must be positive");
  for (const auto& [id, obs] : by_track(gt)) {
    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= obs.size(); ++i) {
      const bool run_ends = i == obs.size() || obs[i].frame != obs[i - 1].frame + 1;
      if (!run_ends) continue;
      const std::size_t len = i - run_start;
      for (std::size_t s = run_start; s + t < run_start + len; ++s) {
        TrajectorySegment seg;
        seg.track_id = id;
        seg.sequence = sequence;
        seg.history.reserve(t);
        for (std::size_t k = 0; k < t; ++k) seg.history.push_back(obs[s + k].box);
        seg.target = obs[s + t].box;
        out.push_back(std::move(seg));
      }
      run_start = i;
    }
  }
  return out;
}

std::vector<TrajectorySegment> subsample(const std::vector<TrajectorySegment>& segments, std::size_t n,
                                         std::uint64_t seed) {
  if (n == 0 || segments.size() <= n) return segments;
  std::vector<std::size_t> idx(segments.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed ^ 0x5A3B1EULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<TrajectorySegment> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(segments[i]);
  return out;
}

HistoricalTrajectory apply_mask_augmentation(const TrajectorySegment& seg, double p, std::mt19937_64& rng) {
  std::vector<Slot> slots(seg.history.begin(), seg.history.end());
  if (p > 0.0) {
    std::bernoulli_distribution coin(p);
    bool any = false;
    for (auto& s : slots) {
      if (coin(rng)) {
        s.reset();
      } else {
        any = true;
      }
    }
    if (!any && !slots.empty()) slots.back() = seg.history.back();
  }
  return HistoricalTrajectory(std::move(slots));
}

void jitter(HistoricalTrajectory& h, double std, std::mt19937_64& rng) {
  if (std <= 0.0) return;
  std::normal_distribution<double> n(0.0, std);
  std::vector<Slot> slots = h.slots();
  for (auto& s : slots) {
    if (!s) continue;
    s->cx += n(rng);
    s->cy += n(rng);
    s->w = std::max(1e-4, s->w + n(rng));
    s->h = std::max(1e-4, s->h + n(rng));
  }
  h = HistoricalTrajectory(std::move(slots));
}

// Moves history and target together by one random offset, keeping every
// centre inside [0.01, 0.99] so the sigmoid range can still reach it, and
// scales every width and height by one common factor.
TrajectorySegment translated(const TrajectorySegment& seg, double range, double resize, std::mt19937_64& rng) {
  if (range <= 0.0 && resize <= 0.0) return seg;
  double x0 = seg.target.cx, x1 = seg.target.cx, y0 = seg.target.cy, y1 = seg.target.cy;
  for (const auto& b : seg.history) {
    x0 = std::min(x0, b.cx), x1 = std::max(x1, b.cx);
    y0 = std::min(y0, b.cy), y1 = std::max(y1, b.cy);
  }
  auto draw = [&](double lo, double hi) {
    lo = std::max(lo, -range), hi = std::min(hi, range);
    return lo < hi ? std::uniform_real_distribution<double>(lo, hi)(rng) : 0.0;
  };
  const double dx = draw(0.01 - x0, 0.99 - x1), dy = draw(0.01 - y0, 0.99 - y1);
  TrajectorySegment out = seg;
  const double k = resize > 0.0 ? std::uniform_real_distribution<double>(1.0 - resize, 1.0 + resize)(rng) : 1.0;
  auto move = [&](BBox& b) {
    b.cx += dx, b.cy += dy;
    b.w = std::min(0.99, b.w * k), b.h = std::min(0.99, b.h * k);
  };
  for (auto& b : out.history) move(b);
  move(out.target);
  return out;
}

HistoricalTrajectory unmasked(const TrajectorySegment& seg) {
  return HistoricalTrajectory(std::vector<Slot>(seg.history.begin(), seg.history.end()));
}

ad::Tensor l1_loss(const ad::Tensor& pred, const ad::Tensor& gt) { return ad::mean(ad::abs(ad::sub(pred, gt))); }

std::pair<std::vector<TrajectorySegment>, std::vector<TrajectorySegment>> split_by_identity(
    const std::vector<TrajectorySegment>& segments, double val_fraction, std::uint64_t seed) {
  std::set<std::pair<int, int>> ids;
  for (const auto& s : segments) ids.insert({s.sequence, s.track_id});
  std::vector<std::pair<int, int>> order(ids.begin(), ids.end());
  std::mt19937_64 rng(seed ^ 0x5EEDULL);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(order.size())));
  // Keep at least one training identity.
  if (n_val >= order.size()) n_val = order.empty() ? 0 : order.size() - 1;
  const std::set<std::pair<int, int>> val_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::pair<std::vector<TrajectorySegment>, std::vector<TrajectorySegment>> out;
  for (const auto& s : segments) {
    (val_ids.count({s.sequence, s.track_id}) ? out.second : out.first).push_back(s);
  }
  return out;
}

namespace {

void keep_large_buffers_on_heap() {
#if defined(__GLIBC__)
  // Activations are large and short-lived; returning them to the OS every
  // step costs a page fault per element page on the next step.
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)once;
#endif
}

ad::Tensor targets_tensor(std::span<const TrajectorySegment* const> batch) {
  std::vector<double> v;
  v.reserve(batch.size() * 4);
  for (const auto* s : batch) {
    const auto a = s->target.as_array();
    v.insert(v.end(), a.begin(), a.end());
  }
  return ad::Tensor::constant({batch.size(), 4}, std::move(v));
}

double mean_loss_unmasked(std::span<const TrajectorySegment> segs, const model::ModelParams& params,
                          const model::EncoderConfig& cfg, std::size_t batch_size) {
  return assess(segs, params, cfg, batch_size).l1;
}

}  // namespace

TrainResult train(const std::vector<TrajectorySegment>& segments, model::ModelParams params,
                  const model::EncoderConfig& model_cfg, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (segments.empty()) throw std::invalid_argument("train: no training segments");
  for (const auto& s : segments) {
    if (s.history.size() != model_cfg.history) {
      throw std::invalid_argument("train: segment history length " + std::to_string(s.history.size()) +
                                  " differs from model T=" + std::to_string(model_cfg.history));
    }
  }
  keep_large_buffers_on_heap();

  auto [train_set, val_set] = split_by_identity(segments, cfg.val_fraction, cfg.seed);
  std::vector<ad::Tensor> plist = params.parameters();
  ad::AdamState state = ad::AdamState::like(plist);
  ad::AdamConfig adam{cfg.lr};
  const std::size_t steps_per_epoch = (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = steps_per_epoch * cfg.epochs;
  std::mt19937_64 rng(cfg.seed);

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  std::size_t batch_index = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<TrajectorySegment> moved;
      moved.reserve(end - start);
      std::vector<const TrajectorySegment*> batch;
      std::vector<HistoricalTrajectory> hs;
      for (std::size_t i = start; i < end; ++i) {
        moved.push_back(translated(train_set[order[i]], cfg.translate, cfg.resize, rng));
        batch.push_back(&moved.back());
        hs.push_back(apply_mask_augmentation(*batch.back(), cfg.mask_prob, rng));
        jitter(hs.back(), cfg.input_noise, rng);
      }
      double value = 0.0;
      try {
        for (auto& p : plist) p.zero_grad();
        const ad::Tensor pred = model::forward(hs, params, model_cfg);
        const ad::Tensor loss = l1_loss(pred, targets_tensor(batch));
        value = loss.item();
        ad::backward(loss);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at batch " + std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(value)) {
        throw NumericError("training loss is not finite at batch " + std::to_string(batch_index));
      }
      if (cfg.clip_grad) ad::clip_grad_norm(plist, cfg.clip_norm);
      adam.lr = cfg.lr_at(batch_index, total_steps);
      ad::adam_step(plist, state, adam);
      loss_sum += value * static_cast<double>(end - start);
    }
    EpochStats st;
    st.epoch = epoch;
    st.mean_loss = loss_sum / static_cast<double>(train_set.size());
    if (!val_set.empty()) {
      st.val_loss = mean_loss_unmasked(val_set, params, model_cfg, cfg.batch_size);
      st.has_val = true;
    }
    result.trace.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  for (auto& p : plist) p.zero_grad();
  result.params = std::move(params);
  return result;
}

PredictionQuality assess(std::span<const TrajectorySegment> segments, const model::ModelParams& params,
                         const model::EncoderConfig& cfg, std::size_t batch_size) {
  PredictionQuality q;
  if (segments.empty()) return q;
  double l1 = 0.0, iou_sum = 0.0;
  for (std::size_t start = 0; start < segments.size(); start += batch_size) {
    const std::size_t end = std::min(segments.size(), start + batch_size);
    std::vector<HistoricalTrajectory> hs;
    for (std::size_t i = start; i < end; ++i) hs.push_back(unmasked(segments[i]));
    const auto preds = model::predict_batch(hs, params, cfg);
    for (std::size_t i = start; i < end; ++i) {
      l1 += 0.25 * l1_box_distance(preds[i - start], segments[i].target);
      iou_sum += iou(preds[i - start], segments[i].target);
    }
  }
  const double n = static_cast<double>(segments.size());
  q.l1 = l1 / n;
  q.mean_iou = iou_sum / n;
  return q;
}

std::string loss_trace_csv(const std::vector<EpochStats>& trace) {
  std::ostringstream os;
  os << "epoch,mean_loss,val_loss\n";
  char buf[96];
  for (const auto& e : trace) {
    if (e.has_val) {
      std::snprintf(buf, sizeof buf, "%zu,%.9f,%.9f\n", e.epoch, e.mean_loss, e.val_loss);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.9f,\n", e.epoch, e.mean_loss);
    }
    os << buf;
  }
  return os.str();
}

}  // namespace amsort::train
