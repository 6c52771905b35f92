#include "amsort/sequence.hpp"

#include <algorithm>

namespace amsort {

void sort_sequence(Sequence& s) {
  std::stable_sort(s.begin(), s.end(), [](const Observation& a, const Observation& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
  });
}

std::map<int, std::vector<Observation>> by_frame(const Sequence& s) {
  std::map<int, std::vector<Observation>> out;
  for (const auto& o : s) out[o.frame].push_back(o);
  return out;
}

std::map<int, std::vector<Observation>> by_track(const Sequence& s) {
  std::map<int, std::vector<Observation>> out;
  for (const auto& o : s) out[o.id].push_back(o);
  for (auto& [id, v] : out) {
    std::stable_sort(v.begin(), v.end(), [](const Observation& a, const Observation& b) { return a.frame < b.frame; });
  }
  return out;
}

}  // namespace amsort
