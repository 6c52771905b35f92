#include "amsort/tracker.hpp"

#include <algorithm>
#include <string>

#include "amsort/error.hpp"

namespace amsort::track {

void LifecycleConfig::validate() const {
  if (min_hits < 1) throw UsageError("lifecycle: min_hits must be >= 1");
  if (max_age < 0) throw UsageError("lifecycle: max_age must be >= 0");
  if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) throw UsageError("lifecycle: min_confidence must lie in [0, 1]");
}

void KalmanModel::predict(std::span<Track> tracks) {
  for (auto& t : tracks) {
    auto p = kalman::kf_predict(*t.kf, cfg_);
    t.kf = p.state;
    t.last_prediction = p.box;
  }
}

void KalmanModel::on_birth(Track& t, const BBox& b) { t.kf = kalman::kf_init(b, cfg_); }

void KalmanModel::on_match(Track& t, const BBox& b) { t.kf = kalman::kf_update(*t.kf, b, cfg_); }

void TransformerModel::predict(std::span<Track> tracks) {
  std::vector<HistoricalTrajectory> hs;
  hs.reserve(tracks.size());
  for (const auto& t : tracks) hs.push_back(t.history);
  const auto boxes = model::predict_batch(hs, params_, cfg_);
  for (std::size_t i = 0; i < tracks.size(); ++i) tracks[i].last_prediction = boxes[i];
}

Tracker::Tracker(MotionModel& model, TrackerConfig cfg) : model_(model), cfg_(cfg) {
  cfg_.lifecycle.validate();
  if (cfg_.history == 0) throw UsageError("tracker: history length must be positive");
}

Sequence Tracker::step(int frame, std::span<const Observation> detections) {
  if (frame <= last_frame_) {
    throw DataError("tracker: frame " + std::to_string(frame) + " after frame " + std::to_string(last_frame_));
  }
  last_frame_ = frame;

  std::vector<BBox> dets;
  std::vector<double> confs;
  for (const auto& d : detections) {
    if (d.frame != frame) throw DataError("tracker: detection of frame " + std::to_string(d.frame) +
                                          " passed to frame " + std::to_string(frame));
    if (d.confidence < cfg_.lifecycle.min_confidence) continue;
    dets.push_back(d.box);
    confs.push_back(d.confidence);
  }

  model_.predict(tracks_);
  std::vector<BBox> preds;
  std::vector<HistoricalTrajectory> hists;
  for (const auto& t : tracks_) {
    preds.push_back(*t.last_prediction);
    hists.push_back(t.history);
  }
  const auto cost = assoc::build_cost(preds, dets, hists, cfg_.assoc.weights);
  const auto ious = assoc::iou_matrix(preds, dets);
  const auto a = assoc::gate_and_assign(cost, ious, cfg_.assoc.iou_threshold);

  Sequence out;
  for (const auto& [ti, di] : a.matches) {
    Track& t = tracks_[ti];
    t.history.push(dets[di]);
    ++t.hits;
    t.misses = 0;
    model_.on_match(t, dets[di]);
    if (t.hits >= cfg_.lifecycle.min_hits) t.activated = true;
    if (t.activated) {
      t.state = TrackState::Active;
      out.push_back({frame, t.id, dets[di], confs[di]});
    }
  }
  std::vector<bool> drop(tracks_.size(), false);
  for (std::size_t ti : a.unmatched_predictions) {
    Track& t = tracks_[ti];
    const Slot s = cfg_.lifecycle.append_prediction ? Slot(t.last_prediction) : Slot();
    t.history.push(s);
    t.hits = 0;
    ++t.misses;
    model_.on_miss(t);
    if (t.activated) t.state = TrackState::Lost;
    // A history with no boxes left carries no motion information.
    if (t.misses > cfg_.lifecycle.max_age || !t.history.has_box()) drop[ti] = true;
  }
  std::vector<Track> kept;
  kept.reserve(tracks_.size() + a.unmatched_detections.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (!drop[i]) kept.push_back(std::move(tracks_[i]));
  }
  tracks_ = std::move(kept);

  for (std::size_t di : a.unmatched_detections) {
    Track t;
    t.id = next_id_++;
    t.history = HistoricalTrajectory::newborn(cfg_.history, dets[di]);
    t.hits = 1;
    model_.on_birth(t, dets[di]);
    if (t.hits >= cfg_.lifecycle.min_hits) {
      t.activated = true;
      t.state = TrackState::Active;
      out.push_back({frame, t.id, dets[di], confs[di]});
    }
    tracks_.push_back(std::move(t));
  }
  sort_sequence(out);
  return out;
}

Sequence run_sequence(const Sequence& detections, MotionModel& model, const TrackerConfig& cfg, int n_frames) {
  Tracker tracker(model, cfg);
  const auto frames = by_frame(detections);
  int last = n_frames;
  if (!frames.empty()) last = std::max(last, frames.rbegin()->first);
  Sequence out;
  static const std::vector<Observation> kNone;
  for (int f = 1; f <= last; ++f) {
    const auto it = frames.find(f);
    const auto& dets = it == frames.end() ? kNone : it->second;
    auto recs = tracker.step(f, dets);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

}  // namespace amsort::track
