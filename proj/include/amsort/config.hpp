#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "amsort/geometry.hpp"
#include "amsort/kalman.hpp"
#include "amsort/predictor.hpp"
#include "amsort/tracker.hpp"
#include "amsort/training.hpp"

namespace amsort::config {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// "key = value" lines; '#' starts a comment; blank lines skipped. Throws
/// UsageError naming the line on anything else.
KeyValues parse_key_values(const std::string& text);

int to_int(const std::string& key, const std::string& value);
std::size_t to_size(const std::string& key, const std::string& value);
double to_real(const std::string& key, const std::string& value);
bool to_bool(const std::string& key, const std::string& value);

enum class PredictorKind { Kalman, Transformer };
std::string to_string(PredictorKind k);
PredictorKind predictor_from_string(const std::string& s);

struct Profile {
  std::string name;
  model::EncoderConfig model;
  train::TrainConfig train;
  track::AssocConfig assoc;
  track::LifecycleConfig lifecycle;
  kalman::KalmanConfig kalman;
  PredictorKind predictor = PredictorKind::Transformer;
  ImageDims dims;
  double eval_iou = 0.5;

  /// Throws UsageError when a component invariant fails.
  void validate() const;
  track::TrackerConfig tracker() const { return {model.history, assoc, lifecycle}; }
};

/// Training-scale values of the original method.
Profile paper_profile();
/// Small model that trains on one CPU core in minutes.
Profile toy_profile();

/// Applies dotted keys such as model.d or assoc.iou_threshold. The key
/// "assoc.cost_profile" replaces the cost weights with a named profile.
void apply_overrides(Profile& p, const KeyValues& kv);

/// "paper", "toy", or a file path. A file may name its starting point with
/// "base = toy" (default "paper"), then override keys.
Profile load_profile(const std::string& spec);

std::string format_profile(const Profile& p);

}  // namespace amsort::config
