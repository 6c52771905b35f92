#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "amsort/autodiff.hpp"
#include "amsort/geometry.hpp"

namespace testing {

inline amsort::BBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(0.1, 0.9), s(0.02, 0.3);
  return {c(rng), c(rng), s(rng), s(rng)};
}

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// |a - b| / max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Worst relative error between analytic gradients of `f` w.r.t. each input
/// and central differences with step h. Each input must be a parameter leaf.
inline double gradient_error(const std::function<amsort::ad::Tensor()>& f,
                             std::vector<amsort::ad::Tensor> inputs, double h = 1e-5) {
  for (auto& t : inputs) t.zero_grad();
  amsort::ad::backward(f());
  double worst = 0.0;
  for (auto& t : inputs) {
    const std::vector<double> g(t.grad().begin(), t.grad().end());
    auto d = t.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double x = d[i];
      d[i] = x + h;
      const double fp = f().item();
      d[i] = x - h;
      const double fm = f().item();
      d[i] = x;
      worst = std::max(worst, rel_err(g[i], (fp - fm) / (2.0 * h)));
    }
  }
  return worst;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("amsort_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
