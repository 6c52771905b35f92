#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amsort/autodiff.hpp"

namespace amsort::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;

  static AdamState like(std::span<const Tensor> params);
};

/// One bias-corrected Adam update of every parameter from its current grad.
/// Parameters without a populated grad are treated as having zero gradient.
void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& cfg);

/// Global L2 norm over all parameter grads.
double grad_global_norm(std::span<const Tensor> params);

/// Scales every grad so the global norm is at most `max_norm`.
void clip_grad_norm(std::span<Tensor> params, double max_norm);

}  // namespace amsort::ad
