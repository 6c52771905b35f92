#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "amsort/autodiff.hpp"
#include "amsort/geometry.hpp"

namespace amsort {

/// One history slot: a box, or std::nullopt for a Mask.
using Slot = std::optional<BBox>;

/// Fixed-length window of the last T observations of one object, oldest
/// first. Newborn histories are left-padded with Mask slots.
class HistoricalTrajectory {
 public:
  HistoricalTrajectory() = default;
  explicit HistoricalTrajectory(std::vector<Slot> slots);

  /// Single observed box at the most recent slot, Mask everywhere else.
  static HistoricalTrajectory newborn(std::size_t length, const BBox& first);

  std::size_t length() const { return slots_.size(); }
  const std::vector<Slot>& slots() const { return slots_; }
  const Slot& operator[](std::size_t i) const { return slots_[i]; }

  /// Appends at the recent end and evicts the oldest slot.
  void push(const Slot& s);

  std::size_t box_count() const;
  bool has_box() const { return box_count() > 0; }
  /// Most recent Box slot, if any.
  std::optional<BBox> latest_box() const;

  friend bool operator==(const HistoricalTrajectory&, const HistoricalTrajectory&) = default;

 private:
  std::vector<Slot> slots_;
};

namespace embed {

inline constexpr double kDefaultSpatialScale = 100.0;
inline constexpr double kFrequencyBase = 10000.0;

/// Spatial sinusoidal encoding of a box: four contiguous blocks of D/4 dims
/// (cx, cy, w, h). Inside a block, pair i holds sin/cos of v*scale/base^(2i/(D/4)).
/// Requires D % 8 == 0.
std::vector<double> pe_spat(const BBox& b, std::size_t d, double scale = kDefaultSpatialScale);

/// Integer sinusoidal encoding of serial k in [1, max_serial].
std::vector<double> pe_temp(std::size_t k, std::size_t d, std::size_t max_serial);

/// Serial numbers assigned to the T+1 rows front to back: T+1, T, ..., 1.
std::vector<std::size_t> serial_numbers(std::size_t t);

struct EmbeddingParams {
  ad::Tensor pred_token;  // [D]
  ad::Tensor mask_token;  // [D]

  static EmbeddingParams init(std::size_t d, std::mt19937_64& rng, double stddev = 0.02);
  std::size_t dim() const { return pred_token.size(); }
};

struct Embedding {
  ad::Tensor z;       // [B*(T+1), D]
  ad::Tensor x_spat;  // [B*(T+1), D]
};

/// Builds Z and X_spat for a batch of equal-length histories. Row b*(T+1)+i
/// belongs to item b; row T of each item is the prediction token.
/// Throws std::invalid_argument on an all-Mask history or ragged lengths.
Embedding build_embedding(std::span<const HistoricalTrajectory> batch, const EmbeddingParams& p,
                          double scale = kDefaultSpatialScale);

inline Embedding build_embedding(const HistoricalTrajectory& h, const EmbeddingParams& p,
                                 double scale = kDefaultSpatialScale) {
  return build_embedding(std::span<const HistoricalTrajectory>(&h, 1), p, scale);
}

}  // namespace embed
}  // namespace amsort
