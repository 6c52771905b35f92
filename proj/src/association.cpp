#include "amsort/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace amsort::assoc {

double total_cost(const CostMatrix& c, const Assignment& a) {
  double s = 0.0;
  for (auto [r, col] : a.matches) s += c(r, col);
  return s;
}

Assignment hungarian(const CostMatrix& c) {
  const std::size_t rows = c.rows();
  const std::size_t cols = c.cols();
  Assignment out;
  if (rows == 0 || cols == 0) {
    for (std::size_t i = 0; i < rows; ++i) out.unmatched_predictions.push_back(i);
    for (std::size_t j = 0; j < cols; ++j) out.unmatched_detections.push_back(j);
    return out;
  }
  double max_entry = -std::numeric_limits<double>::infinity();
  for (double v : c.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("hungarian: cost matrix has a non-finite entry");
    max_entry = std::max(max_entry, v);
  }
  const std::size_t n = std::max(rows, cols);
  const double sentinel = max_entry + 1.0;
  auto cost = [&](std::size_t i, std::size_t j) { return (i < rows && j < cols) ? c(i, j) : sentinel; };

  // Shortest augmenting path with row/column potentials, 1-based with a
  // virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<bool> row_used(rows, false), col_used(cols, false);
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j] - 1;
    const std::size_t col = j - 1;
    if (i < rows && col < cols) {
      matches.emplace_back(i, col);
      row_used[i] = true;
      col_used[col] = true;
    }
  }
  std::sort(matches.begin(), matches.end());
  out.matches = std::move(matches);
  for (std::size_t i = 0; i < rows; ++i)
    if (!row_used[i]) out.unmatched_predictions.push_back(i);
  for (std::size_t j = 0; j < cols; ++j)
    if (!col_used[j]) out.unmatched_detections.push_back(j);
  return out;
}

CostWeights cost_profile(const std::string& name) {
  if (name == "iou") return {1.0, 0.0, 0.0, 3};
  if (name == "iou_dtheta") return {1.0, 0.0, 1.0, 3};
  if (name == "iou_l1") return {1.0, 1.0, 0.0, 3};
  if (name == "iou_dtheta_l1") return {1.0, 1.0, 1.0, 3};
  throw std::invalid_argument("unknown cost profile '" + name +
                              "' (expected iou, iou_dtheta, iou_l1 or iou_dtheta_l1)");
}

double direction_difference(const HistoricalTrajectory& history, const BBox& det, std::size_t lag) {
  const auto& s = history.slots();
  std::size_t last = s.size();
  for (std::size_t i = s.size(); i-- > 0;) {
    if (s[i]) {
      last = i;
      break;
    }
  }
  if (last == s.size() || lag == 0 || last < lag || !s[last - lag]) return 0.0;
  const BBox& now = *s[last];
  const BBox& before = *s[last - lag];
  const double ax = now.cx - before.cx, ay = now.cy - before.cy;
  const double bx = det.cx - now.cx, by = det.cy - now.cy;
  const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double cosang = std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
  return std::acos(cosang) / std::numbers::pi;
}

CostMatrix iou_matrix(std::span<const BBox> preds, std::span<const BBox> dets) {
  CostMatrix m(preds.size(), dets.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t j = 0; j < dets.size(); ++j) m(i, j) = iou(preds[i], dets[j]);
  return m;
}

CostMatrix build_cost(std::span<const BBox> preds, std::span<const BBox> dets,
                      std::span<const HistoricalTrajectory> histories, const CostWeights& w) {
  if (w.iou < 0.0 || w.l1 < 0.0 || w.dtheta < 0.0) {
    throw std::invalid_argument("build_cost: weights must be non-negative");
  }
  if (w.iou == 0.0 && w.l1 == 0.0 && w.dtheta == 0.0) {
    throw std::invalid_argument("build_cost: at least one weight must be positive");
  }
  if (w.dtheta > 0.0 && histories.size() != preds.size()) {
    throw std::invalid_argument("build_cost: direction cost needs one history per prediction");
  }
  CostMatrix c(preds.size(), dets.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      double v = 0.0;
      if (w.iou > 0.0) v += w.iou * (1.0 - iou(preds[i], dets[j]));
      if (w.l1 > 0.0) v += w.l1 * l1_box_distance(preds[i], dets[j]);
      if (w.dtheta > 0.0) v += w.dtheta * direction_difference(histories[i], dets[j], w.dtheta_lag);
      c(i, j) = v;
    }
  }
  return c;
}

Assignment gate_and_assign(const CostMatrix& c, const CostMatrix& iou, double iou_threshold) {
  if (iou_threshold < 0.0 || iou_threshold >= 1.0) {
    throw std::invalid_argument("gate_and_assign: iou threshold must lie in [0, 1)");
  }
  if (iou.rows() != c.rows() || iou.cols() != c.cols()) {
    throw std::invalid_argument("gate_and_assign: iou matrix shape differs from cost matrix");
  }
  Assignment raw = hungarian(c);
  Assignment out;
  out.unmatched_predictions = raw.unmatched_predictions;
  out.unmatched_detections = raw.unmatched_detections;
  for (auto [i, j] : raw.matches) {
    if (iou(i, j) < iou_threshold) {
      out.unmatched_predictions.push_back(i);
      out.unmatched_detections.push_back(j);
    } else {
      out.matches.emplace_back(i, j);
    }
  }
  std::sort(out.unmatched_predictions.begin(), out.unmatched_predictions.end());
  std::sort(out.unmatched_detections.begin(), out.unmatched_detections.end());
  return out;
}

}  // namespace amsort::assoc
