#include "amsort/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "amsort/config.hpp"
#include "amsort/error.hpp"
#include "amsort/mot_io.hpp"

namespace amsort::synth {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(MotionKind k) {
  switch (k) {
    case MotionKind::Linear: return "Linear";
    case MotionKind::Sinusoidal: return "Sinusoidal";
    case MotionKind::DirectionShift: return "DirectionShift";
    case MotionKind::Crossing: return "Crossing";
    case MotionKind::Mixed: return "Mixed";
  }
  return "Linear";
}

MotionKind motion_kind_from_string(const std::string& s) {
  for (auto k : {MotionKind::Linear, MotionKind::Sinusoidal, MotionKind::DirectionShift, MotionKind::Crossing,
                 MotionKind::Mixed}) {
    if (to_string(k) == s) return k;
  }
  throw UsageError("unknown motion_kind '" + s + "'");
}

void Scenario::validate() const {
  if (n_objects < 0) throw UsageError("scenario: n_objects must be non-negative");
  if (n_frames < 1) throw UsageError("scenario: n_frames must be positive");
  if (!(detection_noise_std >= 0.0)) throw UsageError("scenario: detection_noise_std must be >= 0");
  for (const auto& w : occlusion_windows) {
    if (w.object_id < 1 || w.object_id > n_objects || w.start < 1 || w.end > n_frames || w.start > w.end) {
      throw UsageError("scenario: occlusion window " + std::to_string(w.object_id) + ":" + std::to_string(w.start) +
                       "-" + std::to_string(w.end) + " is out of range");
    }
  }
}

double reflect(double x, double lo, double hi) {
  const double len = hi - lo;
  double y = std::fmod(x - lo, 2.0 * len);
  if (y < 0.0) y += 2.0 * len;
  return lo + (y <= len ? y : 2.0 * len - y);
}

BBox box_at(const ObjectMotion& m, int frame) {
  const double f = static_cast<double>(frame);
  double x = 0.0, y = 0.0;
  switch (m.kind) {
    case MotionKind::Sinusoidal:
      x = m.x0 + m.amplitude * std::sin(m.omega * f + m.phase);
      y = m.y0 + m.vy * f;
      break;
    case MotionKind::DirectionShift: {
      // Velocity for the step into frame g is rotated by every shift at or before g.
      x = m.x0;
      y = m.y0;
      double vx = m.vx, vy = m.vy;
      int from = 0;
      for (std::size_t i = 0; i < m.shift_frames.size() && m.shift_frames[i] <= frame; ++i) {
        const int upto = m.shift_frames[i] - 1;
        x += vx * (upto - from);
        y += vy * (upto - from);
        from = upto;
        const double c = std::cos(m.shift_angles[i]), s = std::sin(m.shift_angles[i]);
        const double nvx = c * vx - s * vy;
        vy = s * vx + c * vy;
        vx = nvx;
      }
      x += vx * (frame - from);
      y += vy * (frame - from);
      break;
    }
    default:
      x = m.x0 + m.vx * f;
      y = m.y0 + m.vy * f;
      break;
  }
  if (m.fold) {
    x = reflect(x, kMargin, 1.0 - kMargin);
    y = reflect(y, kMargin, 1.0 - kMargin);
  }
  double w = m.w, h = m.h;
  if (m.shape_shift_frame > 0 && frame > m.shape_shift_frame) {
    const double t = std::min(1.0, static_cast<double>(frame - m.shape_shift_frame) / kShapeShiftFrames);
    w = m.w + (m.h - m.w) * t;
    h = m.h + (m.w - m.h) * t;
  }
  return {x, y, w, h};
}

namespace {

MotionKind mixed_kind(int index, int n) {
  switch (index % 4) {
    case 0: return index + 1 < n ? MotionKind::Crossing : MotionKind::Linear;
    case 1: return MotionKind::Crossing;
    case 2: return MotionKind::Sinusoidal;
    default: return MotionKind::DirectionShift;
  }
}

std::vector<ObjectMotion> draw_objects(const Scenario& s, std::mt19937_64& rng) {
  auto U = [&rng](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto I = [&rng](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  std::vector<ObjectMotion> objs;
  const int n = s.n_objects;
  for (int i = 0; i < n; ++i) {
    MotionKind kind = s.motion_kind == MotionKind::Mixed ? mixed_kind(i, n) : s.motion_kind;
    ObjectMotion m;
    m.w = U(0.05, 0.15);
    m.h = U(0.05, 0.15);
    if (s.shape_shift) m.shape_shift_frame = I(std::max(1, s.n_frames / 4), std::max(1, 3 * s.n_frames / 4));
    if (kind == MotionKind::Crossing) {
      // Crossing objects come in pairs meeting at one point mid-sequence.
      if (i + 1 >= n) kind = MotionKind::Linear;
    }
    m.kind = kind;
    switch (kind) {
      case MotionKind::Linear: {
        m.x0 = U(0.2, 0.8);
        m.y0 = U(0.2, 0.8);
        const double speed = U(0.003, 0.008), ang = U(0.0, 2.0 * kPi);
        m.vx = speed * std::cos(ang);
        m.vy = speed * std::sin(ang);
        objs.push_back(m);
        break;
      }
      case MotionKind::Sinusoidal: {
        m.x0 = U(0.25, 0.75);
        m.y0 = U(0.2, 0.8);
        m.amplitude = U(0.05, 0.12);
        m.omega = 2.0 * kPi / U(40.0, 80.0);
        m.phase = U(0.0, 2.0 * kPi);
        m.vy = U(-0.003, 0.003);
        objs.push_back(m);
        break;
      }
      case MotionKind::DirectionShift: {
        m.x0 = U(0.2, 0.8);
        m.y0 = U(0.2, 0.8);
        const double speed = U(0.004, 0.010), ang = U(0.0, 2.0 * kPi);
        m.vx = speed * std::cos(ang);
        m.vy = speed * std::sin(ang);
        for (int f = I(30, 70); f <= s.n_frames; f += I(30, 70)) {
          const double turn = U(kPi / 2.0, kPi) * (I(0, 1) ? 1.0 : -1.0);
          m.shift_frames.push_back(f);
          m.shift_angles.push_back(turn);
        }
        objs.push_back(m);
        break;
      }
      case MotionKind::Crossing: {
        ObjectMotion other = m;
        other.w = U(0.05, 0.15);
        other.h = U(0.05, 0.15);
        if (s.shape_shift) other.shape_shift_frame = m.shape_shift_frame;
        const double cx = U(0.35, 0.65), cy = U(0.35, 0.65);
        const int spread = std::max(0, s.n_frames / 10);
        const double fc = s.n_frames / 2 + I(-spread, spread);
        const double speed = U(0.004, 0.008), ang = U(0.0, 2.0 * kPi), delta = U(kPi / 3.0, 2.0 * kPi / 3.0);
        m.vx = speed * std::cos(ang);
        m.vy = speed * std::sin(ang);
        other.vx = speed * std::cos(ang + delta);
        other.vy = speed * std::sin(ang + delta);
        m.x0 = cx - m.vx * fc;
        m.y0 = cy - m.vy * fc;
        other.x0 = cx - other.vx * fc;
        other.y0 = cy - other.vy * fc;
        objs.push_back(m);
        objs.push_back(other);
        ++i;
        break;
      }
      case MotionKind::Mixed: break;
    }
  }
  return objs;
}

bool occluded(const Scenario& s, int id, int frame) {
  return std::any_of(s.occlusion_windows.begin(), s.occlusion_windows.end(), [&](const OcclusionWindow& w) {
    return w.object_id == id && frame >= w.start && frame <= w.end;
  });
}

}  // namespace

Generated generate(const Scenario& s) {
  s.validate();
  std::mt19937_64 rng(s.seed);
  Generated g;
  g.scenario = s;
  g.objects = draw_objects(s, rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> conf(0.6, 1.0);
  for (int f = 1; f <= s.n_frames; ++f) {
    for (std::size_t i = 0; i < g.objects.size(); ++i) {
      const int id = static_cast<int>(i) + 1;
      const BBox truth = box_at(g.objects[i], f);
      g.ground_truth.push_back({f, id, truth, 1.0});
      if (occluded(s, id, f)) continue;
      BBox d = truth;
      if (s.detection_noise_std > 0.0) {
        d.cx += s.detection_noise_std * noise(rng);
        d.cy += s.detection_noise_std * noise(rng);
        d.w = std::max(1e-4, d.w + s.detection_noise_std * noise(rng));
        d.h = std::max(1e-4, d.h + s.detection_noise_std * noise(rng));
      }
      g.detections.push_back({f, -1, d, conf(rng)});
    }
  }
  return g;
}

Scenario dance_toy(std::uint64_t seed) {
  Scenario s;
  s.name = "dance-toy";
  s.n_objects = 8;
  s.n_frames = 600;
  s.motion_kind = MotionKind::Mixed;
  s.detection_noise_std = 0.002;
  s.seed = seed;
  // Both occlusions hide a sinusoidal object (3 and 7) across a turning
  // point, where straight-line extrapolation overshoots.
  std::mt19937_64 rng(seed);
  const auto objs = draw_objects(s, rng);
  constexpr int kGap = 8;
  auto window_at_turn = [&](int id, int from) {
    const auto& m = objs[static_cast<std::size_t>(id - 1)];
    // Turning points satisfy omega*f + phase = pi/2 + k*pi.
    int turn = from + 50;
    for (int f = from; f < s.n_frames - kGap; ++f) {
      const double a = std::cos(m.omega * f + m.phase);
      const double b = std::cos(m.omega * (f + 1) + m.phase);
      if ((a > 0.0) != (b > 0.0)) {
        turn = f;
        break;
      }
    }
    s.occlusion_windows.push_back({id, turn - kGap / 2, turn - kGap / 2 + kGap - 1});
  };
  window_at_turn(3, 100);
  window_at_turn(7, 350);
  return s;
}

Scenario linear_scenario(std::uint64_t seed, int n_objects, int n_frames) {
  Scenario s;
  s.name = "linear";
  s.n_objects = n_objects;
  s.n_frames = n_frames;
  s.motion_kind = MotionKind::Linear;
  s.detection_noise_std = 0.0;
  s.seed = seed;
  return s;
}

Scenario parse_scenario(const std::string& text) {
  const auto kv = config::parse_key_values(text);
  Scenario s;
  for (const auto& [key, value] : kv) {
    if (key == "name") {
      s.name = value;
    } else if (key == "n_objects") {
      s.n_objects = config::to_int(key, value);
    } else if (key == "n_frames") {
      s.n_frames = config::to_int(key, value);
    } else if (key == "motion_kind") {
      s.motion_kind = motion_kind_from_string(value);
    } else if (key == "detection_noise_std") {
      s.detection_noise_std = config::to_real(key, value);
    } else if (key == "seed") {
      auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), s.seed);
      if (ec != std::errc() || end != value.data() + value.size()) {
        throw UsageError("scenario: seed must be a non-negative integer, got '" + value + "'");
      }
    } else if (key == "shape_shift") {
      s.shape_shift = config::to_bool(key, value);
    } else if (key == "occlusion_windows") {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        OcclusionWindow w;
        char colon = 0, dash = 0;
        std::istringstream is(item);
        if (!(is >> w.object_id >> colon >> w.start >> dash >> w.end) || colon != ':' || dash != '-') {
          throw UsageError("scenario: malformed occlusion window '" + item + "' (expected id:start-end)");
        }
        s.occlusion_windows.push_back(w);
      }
    } else {
      throw UsageError("scenario: unknown key '" + key + "'");
    }
  }
  s.validate();
  return s;
}

Scenario read_scenario_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

std::string format_scenario(const Scenario& s) {
  std::ostringstream os;
  os << "name = " << s.name << '\n'
     << "n_objects = " << s.n_objects << '\n'
     << "n_frames = " << s.n_frames << '\n'
     << "motion_kind = " << to_string(s.motion_kind) << '\n'
     << "occlusion_windows = ";
  for (std::size_t i = 0; i < s.occlusion_windows.size(); ++i) {
    const auto& w = s.occlusion_windows[i];
    os << (i ? ";" : "") << w.object_id << ':' << w.start << '-' << w.end;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", s.detection_noise_std);
  os << '\n'
     << "detection_noise_std = " << buf << '\n'
     << "seed = " << s.seed << '\n'
     << "shape_shift = " << (s.shape_shift ? "true" : "false") << '\n';
  return os.str();
}

void emit_mot_files(const Generated& g, const std::filesystem::path& dir, const ImageDims& dims) {
  const auto root = dir / g.scenario.name;
  io::write_mot_file(root / "gt" / "gt.txt", io::to_records(g.ground_truth, dims));
  io::write_mot_file(root / "det" / "det.txt", io::to_records(g.detections, dims));
}

}  // namespace amsort::synth
