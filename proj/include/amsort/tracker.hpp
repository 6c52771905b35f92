#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "amsort/association.hpp"
#include "amsort/embedding.hpp"
#include "amsort/kalman.hpp"
#include "amsort/predictor.hpp"
#include "amsort/sequence.hpp"

namespace amsort::track {

enum class TrackState { Tentative, Active, Lost };

struct Track {
  int id = 0;
  TrackState state = TrackState::Tentative;
  HistoricalTrajectory history;
  int hits = 0;    // consecutive matches
  int misses = 0;  // consecutive misses
  bool activated = false;
  std::optional<BBox> last_prediction;
  std::optional<kalman::KalmanState> kf;  // only used by the Kalman model
};

struct LifecycleConfig {
  int min_hits = 3;
  int max_age = 30;
  double min_confidence = 0.4;
  /// Unmatched tracks append their own prediction instead of a Mask slot.
  bool append_prediction = false;

  void validate() const;
};

struct AssocConfig {
  assoc::CostWeights weights;
  double iou_threshold = 0.3;
};

struct TrackerConfig {
  std::size_t history = 30;  // T
  AssocConfig assoc;
  LifecycleConfig lifecycle;
};

/// Motion predictor behind the pipeline. predict() fills last_prediction of
/// every track; the hooks let stateful models follow the track lifecycle.
class MotionModel {
 public:
  virtual ~MotionModel() = default;
  virtual void predict(std::span<Track> tracks) = 0;
  virtual void on_birth(Track&, const BBox&) {}
  virtual void on_match(Track&, const BBox&) {}
  virtual void on_miss(Track&) {}
};

class KalmanModel final : public MotionModel {
 public:
  explicit KalmanModel(kalman::KalmanConfig cfg = {}) : cfg_(cfg) {}
  void predict(std::span<Track> tracks) override;
  void on_birth(Track& t, const BBox& b) override;
  void on_match(Track& t, const BBox& b) override;

 private:
  kalman::KalmanConfig cfg_;
};

class TransformerModel final : public MotionModel {
 public:
  TransformerModel(const model::ModelParams& params, model::EncoderConfig cfg) : params_(params), cfg_(cfg) {}
  void predict(std::span<Track> tracks) override;

 private:
  const model::ModelParams& params_;
  model::EncoderConfig cfg_;
};

class Tracker {
 public:
  Tracker(MotionModel& model, TrackerConfig cfg);

  /// Processes one frame; frames must strictly increase across calls.
  /// Returns the output records (matched boxes of Active tracks).
  Sequence step(int frame, std::span<const Observation> detections);

  const std::vector<Track>& tracks() const { return tracks_; }

 private:
  MotionModel& model_;
  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  int next_id_ = 1;
  int last_frame_ = 0;
};

/// Steps over every frame from 1 to the last detection frame (or n_frames if larger).
Sequence run_sequence(const Sequence& detections, MotionModel& model, const TrackerConfig& cfg,
                      int n_frames = 0);

}  // namespace amsort::track
