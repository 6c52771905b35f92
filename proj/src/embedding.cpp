#include "amsort/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace amsort {

HistoricalTrajectory::HistoricalTrajectory(std::vector<Slot> slots) : slots_(std::move(slots)) {}

HistoricalTrajectory HistoricalTrajectory::newborn(std::size_t length, const BBox& first) {
  if (length == 0) throw std::invalid_argument("history length must be positive");
  std::vector<Slot> s(length, std::nullopt);
  s.back() = first;
  return HistoricalTrajectory(std::move(s));
}

void HistoricalTrajectory::push(const Slot& s) {
  if (slots_.empty()) return;
  std::rotate(slots_.begin(), slots_.begin() + 1, slots_.end());
  slots_.back() = s;
}

std::size_t HistoricalTrajectory::box_count() const {
  return static_cast<std::size_t>(
      std::count_if(slots_.begin(), slots_.end(), [](const Slot& s) { return s.has_value(); }));
}

std::optional<BBox> HistoricalTrajectory::latest_box() const {
  for (auto it = slots_.rbegin(); it != slots_.rend(); ++it)
    if (*it) return *it;
  return std::nullopt;
}

namespace embed {

std::vector<double> pe_spat(const BBox& b, std::size_t d, double scale) {
  if (d == 0 || d % 8 != 0) {
    throw std::invalid_argument("pe_spat: embedding dim must be a positive multiple of 8, got " +
                                std::to_string(d));
  }
  const std::size_t block = d / 4;
  const auto coords = b.as_array();
  std::vector<double> out(d);
  for (std::size_t c = 0; c < 4; ++c) {
    const double v = coords[c] * scale;
    for (std::size_t i = 0; i < block / 2; ++i) {
      const double freq = std::pow(kFrequencyBase, -2.0 * static_cast<double>(i) / static_cast<double>(block));
      out[c * block + 2 * i] = std::sin(v * freq);
      out[c * block + 2 * i + 1] = std::cos(v * freq);
    }
  }
  return out;
}

std::vector<double> pe_temp(std::size_t k, std::size_t d, std::size_t max_serial) {
  if (k < 1 || k > max_serial) {
    throw std::invalid_argument("pe_temp: serial " + std::to_string(k) + " outside [1, " +
                                std::to_string(max_serial) + "]");
  }
  if (d == 0 || d % 2 != 0) throw std::invalid_argument("pe_temp: embedding dim must be even");
  std::vector<double> out(d);
  const double pos = static_cast<double>(k);
  for (std::size_t i = 0; i < d / 2; ++i) {
    const double freq = std::pow(kFrequencyBase, -2.0 * static_cast<double>(i) / static_cast<double>(d));
    out[2 * i] = std::sin(pos * freq);
    out[2 * i + 1] = std::cos(pos * freq);
  }
  return out;
}

std::vector<std::size_t> serial_numbers(std::size_t t) {
  std::vector<std::size_t> s(t + 1);
  for (std::size_t i = 0; i <= t; ++i) s[i] = t + 1 - i;
  return s;
}

EmbeddingParams EmbeddingParams::init(std::size_t d, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> nd(0.0, stddev);
  std::vector<double> pred(d), mask(d);
  for (auto& v : pred) v = nd(rng);
  for (auto& v : mask) v = nd(rng);
  return {ad::Tensor::parameter({d}, std::move(pred)), ad::Tensor::parameter({d}, std::move(mask))};
}

Embedding build_embedding(std::span<const HistoricalTrajectory> batch, const EmbeddingParams& p,
                          double scale) {
  if (batch.empty()) throw std::invalid_argument("build_embedding: empty batch");
  const std::size_t t = batch[0].length();
  const std::size_t d = p.dim();
  if (t == 0) throw std::invalid_argument("build_embedding: zero-length history");
  const std::size_t rows_per_item = t + 1;
  const std::size_t n = batch.size() * rows_per_item;

  std::vector<double> spatial(n * d, 0.0);
  std::vector<double> is_mask(n, 0.0);
  std::vector<double> is_pred(n, 0.0);
  std::vector<double> temporal(n * d);

  const auto serials = serial_numbers(t);
  std::vector<std::vector<double>> temp_rows;
  temp_rows.reserve(rows_per_item);
  for (auto k : serials) temp_rows.push_back(pe_temp(k, d, t + 1));

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& h = batch[b];
    if (h.length() != t) {
      throw std::invalid_argument("build_embedding: history " + std::to_string(b) + " has length " +
                                  std::to_string(h.length()) + ", expected " + std::to_string(t));
    }
    if (!h.has_box()) {
      throw std::invalid_argument("build_embedding: history " + std::to_string(b) + " is all Mask");
    }
    for (std::size_t i = 0; i < rows_per_item; ++i) {
      const std::size_t row = b * rows_per_item + i;
      if (i == t) {
        is_pred[row] = 1.0;
      } else if (h[i]) {
        const auto e = pe_spat(*h[i], d, scale);
        std::copy(e.begin(), e.end(), spatial.begin() + row * d);
      } else {
        is_mask[row] = 1.0;
      }
      std::copy(temp_rows[i].begin(), temp_rows[i].end(), temporal.begin() + row * d);
    }
  }

  using ad::Tensor;
  const Tensor mask_row = ad::reshape(p.mask_token, {1, d});
  const Tensor pred_row = ad::reshape(p.pred_token, {1, d});
  Tensor x = ad::add(Tensor::constant({n, d}, std::move(spatial)),
                     ad::matmul(Tensor::constant({n, 1}, std::move(is_mask)), mask_row));
  x = ad::add(x, ad::matmul(Tensor::constant({n, 1}, std::move(is_pred)), pred_row));
  Tensor z = ad::add(x, Tensor::constant({n, d}, std::move(temporal)));
  return {z, x};
}

}  // namespace embed
}  // namespace amsort
