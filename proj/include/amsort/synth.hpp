#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "amsort/geometry.hpp"
#include "amsort/sequence.hpp"

namespace amsort::synth {

enum class MotionKind { Linear, Sinusoidal, DirectionShift, Crossing, Mixed };

std::string to_string(MotionKind k);
/// Throws UsageError on unknown names.
MotionKind motion_kind_from_string(const std::string& s);

struct OcclusionWindow {
  int object_id = 1;
  int start = 1;  // inclusive
  int end = 1;    // inclusive

  friend bool operator==(const OcclusionWindow&, const OcclusionWindow&) = default;
};

struct Scenario {
  std::string name = "scenario";
  int n_objects = 4;
  int n_frames = 100;
  MotionKind motion_kind = MotionKind::Linear;
  std::vector<OcclusionWindow> occlusion_windows;
  double detection_noise_std = 0.0;
  std::uint64_t seed = 0;
  bool shape_shift = false;

  /// Throws UsageError when an invariant fails.
  void validate() const;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parameters of one object's motion; positions are closed-form in the frame
/// number except for DirectionShift, which integrates piecewise velocities.
struct ObjectMotion {
  MotionKind kind = MotionKind::Linear;
  double x0 = 0.5, y0 = 0.5;  // position at frame 0 (unfolded)
  double vx = 0.0, vy = 0.0;  // per frame
  double amplitude = 0.0;     // Sinusoidal, along x
  double omega = 0.0;
  double phase = 0.0;
  std::vector<int> shift_frames;     // DirectionShift: velocity rotates at these frames
  std::vector<double> shift_angles;  // radians, one per shift frame
  double w = 0.1, h = 0.1;
  int shape_shift_frame = 0;  // 0 disables; w and h swap linearly over 10 frames from here
  bool fold = true;           // reflect the center into [kMargin, 1 - kMargin]
};

inline constexpr double kMargin = 0.05;
inline constexpr int kShapeShiftFrames = 10;

/// Reflects x into [lo, hi].
double reflect(double x, double lo, double hi);

/// Ground-truth box of `m` at `frame` (frames start at 1; frame 0 is the
/// reference position).
BBox box_at(const ObjectMotion& m, int frame);

struct Generated {
  Scenario scenario;
  std::vector<ObjectMotion> objects;  // objects[i] has id i+1
  Sequence ground_truth;
  Sequence detections;  // id -1, confidence in [0.6, 1]
};

Generated generate(const Scenario& s);

/// 8 objects, 600 frames, mixed crossing / sinusoidal / direction-shift
/// motion, two 8-frame occlusion windows, noise std 0.002.
Scenario dance_toy(std::uint64_t seed);

/// Noise-free constant-velocity scenario.
Scenario linear_scenario(std::uint64_t seed, int n_objects = 16, int n_frames = 300);

/// key = value text using the Scenario field names. occlusion_windows is a
/// ';'-separated list of id:start-end.
Scenario parse_scenario(const std::string& text);
Scenario read_scenario_file(const std::filesystem::path& path);
std::string format_scenario(const Scenario& s);

/// Writes <dir>/<name>/gt/gt.txt and <dir>/<name>/det/det.txt.
void emit_mot_files(const Generated& g, const std::filesystem::path& dir, const ImageDims& dims);

}  // namespace amsort::synth
