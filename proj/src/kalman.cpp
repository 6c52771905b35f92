#include "amsort/kalman.hpp"

#include "amsort/error.hpp"

namespace amsort::kalman {

namespace {

Matrix8 transition() {
  Matrix8 f = Matrix8::Identity();
  for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
  return f;
}

Matrix8 process_noise(const KalmanConfig& cfg) {
  Vector8 d;
  d << cfg.q_pos, cfg.q_pos, cfg.q_pos, cfg.q_pos, cfg.q_vel, cfg.q_vel, cfg.q_vel, cfg.q_vel;
  return d.asDiagonal();
}

}  // namespace

KalmanState kf_init(const BBox& b, const KalmanConfig& cfg) {
  KalmanState s;
  s.mean << b.cx, b.cy, b.w, b.h, 0.0, 0.0, 0.0, 0.0;
  Vector8 var;
  const double p = cfg.init_pos_std * cfg.init_pos_std;
  const double v = cfg.init_vel_std * cfg.init_vel_std;
  var << p, p, p, p, v, v, v, v;
  s.cov = var.asDiagonal();
  return s;
}

Prediction kf_predict(const KalmanState& s, const KalmanConfig& cfg) {
  static const Matrix8 F = transition();
  KalmanState out;
  out.mean = F * s.mean;
  out.cov = F * s.cov * F.transpose() + process_noise(cfg);
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return {out, out.box()};
}

KalmanState kf_update(const KalmanState& s, const BBox& z, const KalmanConfig& cfg) {
  using Matrix4 = Eigen::Matrix4d;
  using Matrix48 = Eigen::Matrix<double, 4, 8>;
  Matrix48 H = Matrix48::Zero();
  H.block<4, 4>(0, 0).setIdentity();

  Eigen::Vector4d meas(z.cx, z.cy, z.w, z.h);
  const Eigen::Vector4d innovation = meas - H * s.mean;
  const Matrix4 S = H * s.cov * H.transpose() + cfg.r * Matrix4::Identity();
  const Eigen::LLT<Matrix4> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NumericError("kf_update: innovation covariance is not positive definite");
  }
  // K = P H^T S^-1
  const Eigen::Matrix<double, 8, 4> K = llt.solve(H * s.cov.transpose()).transpose();
  KalmanState out;
  out.mean = s.mean + K * innovation;
  // Joseph form keeps the covariance symmetric PSD.
  const Matrix8 I_KH = Matrix8::Identity() - K * H;
  out.cov = I_KH * s.cov * I_KH.transpose() + cfg.r * K * K.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

}  // namespace amsort::kalman
