#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amsort/autodiff.hpp"
#include "amsort/checkpoint.hpp"
#include "amsort/embedding.hpp"
#include "amsort/geometry.hpp"

namespace amsort::model {

struct EncoderConfig {
  std::size_t n_layers = 6;
  std::size_t n_heads = 8;
  std::size_t d = 512;
  std::size_t ffn_dim = 2048;
  std::size_t head_hidden = 512;
  std::size_t history = 30;  // T
  double spatial_scale = embed::kDefaultSpatialScale;

  /// Throws std::invalid_argument when any invariant fails.
  void validate() const;
};

struct EncoderLayer {
  ad::Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  ad::Tensor ln1_gain, ln1_bias;
  ad::Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  ad::Tensor ln2_gain, ln2_bias;
};

struct PredictionHead {
  ad::Tensor w1, b1, w2, b2, w3, b3;
};

/// Every learnable array of the motion predictor.
struct ModelParams {
  embed::EmbeddingParams embedding;
  std::vector<EncoderLayer> layers;
  PredictionHead head;

  static ModelParams init(const EncoderConfig& cfg, std::uint64_t seed);

  /// Stable (name, tensor) listing; names are the checkpoint keys.
  std::vector<std::pair<std::string, ad::Tensor>> named_parameters() const;
  std::vector<ad::Tensor> parameters() const;

  std::vector<ad::NamedArray> to_arrays() const;
  /// Loads values into freshly shaped params; every name must be present.
  static ModelParams from_arrays(const EncoderConfig& cfg, const std::vector<ad::NamedArray>& arrays);
  /// Independent copy that shares no storage with this one.
  ModelParams clone() const;
};

struct EncodeOptions {
  bool layer_norm = true;
  /// When set, receives the [B*heads, S, S] attention weights of every layer.
  std::vector<ad::Tensor>* attention_out = nullptr;
};

/// Transformer encoder over a batch laid out as [B*(T+1), D].
ad::Tensor encode(const ad::Tensor& z, const ad::Tensor& x_spat, std::size_t batch,
                  const ModelParams& params, const EncoderConfig& cfg, const EncodeOptions& opt = {});

/// Head over the refined prediction-token rows: [B, D] -> [B, 4] in (0,1).
ad::Tensor apply_head(const ad::Tensor& tokens, const PredictionHead& head);

/// Full differentiable forward: histories -> [B, 4] predicted boxes.
ad::Tensor forward(std::span<const HistoricalTrajectory> batch, const ModelParams& params,
                   const EncoderConfig& cfg);

BBox predict_box(const HistoricalTrajectory& h, const ModelParams& params, const EncoderConfig& cfg);

/// Item-wise identical to predict_box; errors name the offending index.
std::vector<BBox> predict_batch(std::span<const HistoricalTrajectory> hs, const ModelParams& params,
                                const EncoderConfig& cfg);

}  // namespace amsort::model
