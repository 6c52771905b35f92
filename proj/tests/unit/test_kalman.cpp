#include <doctest.h>

#include <cmath>

#include "amsort/error.hpp"
#include "amsort/kalman.hpp"
#include "amsort/synth.hpp"

using namespace amsort;
using namespace amsort::kalman;

namespace {

// With diagonal initial covariance and diagonal Q and R, each coordinate
// and its velocity form an independent 2-state filter.
struct Scalar2 {
  double x, v, pxx, pxv, pvv;
};

Scalar2 oracle_predict(Scalar2 s, double q_pos, double q_vel) {
  return {s.x + s.v, s.v, s.pxx + 2 * s.pxv + s.pvv + q_pos, s.pxv + s.pvv, s.pvv + q_vel};
}

Scalar2 oracle_update(Scalar2 s, double z, double r) {
  const double sk = s.pxx + r, kx = s.pxx / sk, kv = s.pxv / sk, y = z - s.x;
  return {s.x + kx * y, s.v + kv * y, (1 - kx) * s.pxx, (1 - kx) * s.pxv, s.pvv - kv * s.pxv};
}

}  // namespace

TEST_SUITE("kalman") {
  TEST_CASE("init") {
    const auto s = kf_init(BBox{0.1, 0.2, 0.3, 0.4});
    CHECK(s.box() == BBox{0.1, 0.2, 0.3, 0.4});
    CHECK(s.mean(4) == 0.0);
    CHECK(s.cov(0, 0) == doctest::Approx(0.05 * 0.05));
    CHECK(s.cov(7, 7) == doctest::Approx(0.1 * 0.1));
    CHECK(s.cov(0, 4) == 0.0);
  }

  TEST_CASE("predict/update sequence matches the per-coordinate oracle") {
    const KalmanConfig cfg;
    const double zs[] = {0.50, 0.52, 0.535, 0.56, 0.58, 0.61, 0.63};
    auto s = kf_init(BBox{zs[0], 0.5, 0.1, 0.1}, cfg);
    Scalar2 o{zs[0], 0.0, cfg.init_pos_std * cfg.init_pos_std, 0.0, cfg.init_vel_std * cfg.init_vel_std};
    for (int i = 1; i < 7; ++i) {
      const auto p = kf_predict(s, cfg);
      o = oracle_predict(o, cfg.q_pos, cfg.q_vel);
      CHECK(p.box.cx == doctest::Approx(o.x).epsilon(1e-12));
      CHECK(p.state.cov(0, 4) == doctest::Approx(o.pxv).epsilon(1e-12));
      s = kf_update(p.state, BBox{zs[i], 0.5, 0.1, 0.1}, cfg);
      o = oracle_update(o, zs[i], cfg.r);
      CHECK(s.mean(0) == doctest::Approx(o.x).epsilon(1e-12));
      CHECK(s.mean(4) == doctest::Approx(o.v).epsilon(1e-12));
      CHECK(s.cov(0, 0) == doctest::Approx(o.pxx).epsilon(1e-9));
      CHECK(s.cov(4, 4) == doctest::Approx(o.pvv).epsilon(1e-9));
      CHECK((s.cov - s.cov.transpose()).norm() == 0.0);
    }
  }

  TEST_CASE("constant velocity is learned") {
    auto s = kf_init(BBox{0.2, 0.5, 0.1, 0.1});
    for (int f = 1; f <= 40; ++f) s = kf_update(kf_predict(s).state, BBox{0.2 + 0.01 * f, 0.5, 0.1, 0.1});
    const auto p = kf_predict(s);
    CHECK(p.box.cx == doctest::Approx(0.2 + 0.01 * 41).epsilon(1e-3));
    CHECK(s.mean(4) == doctest::Approx(0.01).epsilon(1e-2));
  }

  TEST_CASE("indefinite innovation covariance is reported") {
    KalmanConfig cfg;
    cfg.r = -1.0;
    auto s = kf_init(BBox{0.5, 0.5, 0.1, 0.1}, cfg);
    CHECK_THROWS_AS(kf_update(s, BBox{0.5, 0.5, 0.1, 0.1}, cfg), NumericError);
  }

  TEST_CASE("error spikes at a direction shift") {
    synth::ObjectMotion m;
    m.kind = synth::MotionKind::DirectionShift;
    m.x0 = 0.3;
    m.y0 = 0.5;
    m.vx = 0.008;
    m.shift_frames = {40};
    m.shift_angles = {std::acos(-1.0)};
    m.fold = false;
    auto s = kf_init(synth::box_at(m, 1));
    std::vector<double> err;
    for (int f = 2; f <= 45; ++f) {
      const auto p = kf_predict(s);
      const auto truth = synth::box_at(m, f);
      err.push_back(l1_box_distance(p.box, truth));
      s = kf_update(p.state, truth);
    }
    double trailing = 0;
    for (int f = 30; f < 40; ++f) trailing += err[f - 2];
    trailing /= 10;
    CHECK(err[40 - 2] >= 5 * trailing);
  }
}
