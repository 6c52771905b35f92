#include "amsort/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace amsort::ad {

AdamState AdamState::like(std::span<const Tensor> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<Tensor> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameter list");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != w.size()) throw std::invalid_argument("adam_step: moment shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (g[i] == 0.0 && m[i] == 0.0 && v[i] == 0.0) continue;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double grad_global_norm(std::span<const Tensor> params) {
  double s = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) s += g * g;
  }
  return std::sqrt(s);
}

void clip_grad_norm(std::span<Tensor> params, double max_norm) {
  const double norm = grad_global_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    auto* node = p.node();
    for (double& g : node->grad) g *= scale;
  }
}

}  // namespace amsort::ad
