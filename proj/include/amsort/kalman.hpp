#pragma once

#include <Eigen/Dense>

#include "amsort/geometry.hpp"

namespace amsort::kalman {

using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;

/// Noise settings in normalized image units (std devs for init, variances for Q/R).
struct KalmanConfig {
  double init_pos_std = 0.05;
  double init_vel_std = 0.1;
  double q_pos = 1e-4;
  double q_vel = 1e-4;
  double r = 1e-4;
};

/// Constant-velocity state over (cx, cy, w, h, vcx, vcy, vw, vh).
struct KalmanState {
  Vector8 mean = Vector8::Zero();
  Matrix8 cov = Matrix8::Identity();

  BBox box() const { return {mean(0), mean(1), mean(2), mean(3)}; }
};

KalmanState kf_init(const BBox& b, const KalmanConfig& cfg = {});

struct Prediction {
  KalmanState state;
  BBox box;
};

/// x' = F x, P' = F P F^T + Q, with position += velocity per frame.
Prediction kf_predict(const KalmanState& s, const KalmanConfig& cfg = {});

/// Standard correction with H selecting the four box components.
/// Throws NumericError if the innovation covariance is not positive definite.
KalmanState kf_update(const KalmanState& s, const BBox& z, const KalmanConfig& cfg = {});

}  // namespace amsort::kalman
