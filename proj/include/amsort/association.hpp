#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "amsort/embedding.hpp"
#include "amsort/geometry.hpp"

namespace amsort::assoc {

/// Dense row-major cost matrix; rows are predictions, columns detections.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }
  std::span<const double> values() const { return v_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (prediction, detection)
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::size_t> unmatched_detections;
};

/// Sum of c(i,j) over the matches.
double total_cost(const CostMatrix& c, const Assignment& a);

/// Minimum-total-cost maximum matching. Rectangular inputs are padded to a
/// square with a sentinel larger than every real entry. Throws
/// std::invalid_argument on non-finite entries.
Assignment hungarian(const CostMatrix& c);

struct CostWeights {
  double iou = 1.0;
  double l1 = 1.0;
  double dtheta = 0.0;
  std::size_t dtheta_lag = 3;
};

/// Named profiles mirroring the cost ablation: "iou", "iou_dtheta",
/// "iou_l1", "iou_dtheta_l1". Throws std::invalid_argument on unknown names.
CostWeights cost_profile(const std::string& name);

/// Direction difference in [0,1]: angle between the track's recent
/// displacement (latest box minus the box `lag` slots earlier) and the step
/// from the latest box to the detection, over pi. 0 when either vector is
/// missing or has zero length.
double direction_difference(const HistoricalTrajectory& history, const BBox& det, std::size_t lag);

/// cost(i,j) = w_iou (1 - iou) + w_l1 l1 + w_dtheta dtheta. `histories` is
/// only read when w_dtheta > 0 and must then parallel `preds`.
CostMatrix build_cost(std::span<const BBox> preds, std::span<const BBox> dets,
                      std::span<const HistoricalTrajectory> histories, const CostWeights& w);

CostMatrix iou_matrix(std::span<const BBox> preds, std::span<const BBox> dets);

/// Hungarian on `c`, then any match with iou below the threshold is split
/// back into an unmatched prediction and an unmatched detection.
Assignment gate_and_assign(const CostMatrix& c, const CostMatrix& iou, double iou_threshold);

}  // namespace amsort::assoc
