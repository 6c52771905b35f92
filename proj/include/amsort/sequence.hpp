#pragma once

#include <map>
#include <vector>

#include "amsort/geometry.hpp"

namespace amsort {

/// One box in one frame. Ground truth and tracker output carry positive ids;
/// raw detections use id -1.
struct Observation {
  int frame = 0;
  int id = -1;
  BBox box;
  double confidence = 1.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Flat list of observations, kept sorted by (frame, id).
using Sequence = std::vector<Observation>;

void sort_sequence(Sequence& s);

/// Observations grouped by frame.
std::map<int, std::vector<Observation>> by_frame(const Sequence& s);

/// Observations grouped by id, each group ordered by frame.
std::map<int, std::vector<Observation>> by_track(const Sequence& s);

}  // namespace amsort
