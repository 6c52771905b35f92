#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "amsort/autodiff.hpp"
#include "amsort/embedding.hpp"
#include "amsort/predictor.hpp"
#include "amsort/sequence.hpp"

namespace amsort::train {

/// T consecutive boxes of one identity plus the box that follows them.
struct TrajectorySegment {
  std::vector<BBox> history;
  BBox target;
  int track_id = 0;
  int sequence = 0;  // disambiguates ids across sequences
};

struct TrainConfig {
  double lr = 1e-4;
  std::size_t epochs = 50;
  std::size_t batch_size = 512;
  double mask_prob = 0.1;
  std::uint64_t seed = 0;
  bool clip_grad = false;
  double clip_norm = 10.0;
  double val_fraction = 0.1;
  /// "constant" keeps lr fixed; "cosine" anneals per step from lr to lr_min.
  std::string lr_schedule = "constant";
  std::size_t max_segments = 0;  // 0 keeps every segment
  double input_noise = 0.0;       // std of Gaussian jitter on history boxes; targets stay clean
  double lr_min = 0.0;
  double translate = 0.0;  // max random shift of a whole segment (history and target) per axis
  double resize = 0.0;     // max relative change of a whole segment's box sizes

  void validate() const;
  /// Learning rate for optimizer step `step` (0-based) of `total`.
  double lr_at(std::size_t step, std::size_t total) const;
};

/// Sliding windows of T+1 boxes, stride 1, inside runs of consecutive
/// frames. A run of length L yields max(0, L - T) segments.
std::vector<TrajectorySegment> segment_trajectories(const Sequence& gt, std::size_t t, int sequence = 0);

/// Deterministic subset of at most n segments (all when n == 0), order preserved.
std::vector<TrajectorySegment> subsample(const std::vector<TrajectorySegment>& segments, std::size_t n,
                                         std::uint64_t seed);

/// Masks each history slot independently with probability p. If every slot
/// ends up masked, the most recent one is restored.
HistoricalTrajectory apply_mask_augmentation(const TrajectorySegment& seg, double p, std::mt19937_64& rng);

/// Adds N(0, std) to every coordinate of every Box slot; w and h stay >= 1e-4.
void jitter(HistoricalTrajectory& h, double std, std::mt19937_64& rng);

HistoricalTrajectory unmasked(const TrajectorySegment& seg);

/// Mean absolute difference over all elements; for [B,4] inputs this is the
/// batch mean of the per-box four-attribute mean.
ad::Tensor l1_loss(const ad::Tensor& pred, const ad::Tensor& gt);

/// Splits by (sequence, track id) so overlapping windows never straddle the split.
std::pair<std::vector<TrajectorySegment>, std::vector<TrajectorySegment>> split_by_identity(
    const std::vector<TrajectorySegment>& segments, double val_fraction, std::uint64_t seed);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double val_loss = 0.0;
  bool has_val = false;
};

struct TrainResult {
  model::ModelParams params;
  std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Adam on the L1 objective with per-epoch mask resampling. `params` is
/// updated in place and also returned. Throws NumericError naming the batch
/// when the loss stops being finite.
TrainResult train(const std::vector<TrajectorySegment>& segments, model::ModelParams params,
                  const model::EncoderConfig& model_cfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct PredictionQuality {
  double l1 = 0.0;        // mean of the four-attribute mean abs error
  double mean_iou = 0.0;
};

/// One-step predictions on unmasked histories.
PredictionQuality assess(std::span<const TrajectorySegment> segments, const model::ModelParams& params,
                         const model::EncoderConfig& cfg, std::size_t batch_size = 256);

/// "epoch,mean_loss,val_loss" with one row per epoch.
std::string loss_trace_csv(const std::vector<EpochStats>& trace);

}  // namespace amsort::train
