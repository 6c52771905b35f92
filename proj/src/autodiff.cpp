#include "amsort/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "amsort/error.hpp"

namespace amsort::ad {

namespace {

std::atomic<std::uint64_t> g_seq{0};

std::shared_ptr<Node> make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  if (numel(shape) != data.size()) {
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  n->is_leaf = true;
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  return n;
}

void check_finite(const Node& n) {
  for (double v : n.value) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by op '") + n.op + "'");
    }
  }
}

// Creates an op result. `backward` is attached only when some parent needs
// gradients; otherwise the result is a constant.
Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->is_leaf = false;
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  check_finite(*n);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  if (rg) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                              " and " + shape_str(b));
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                ", got shape " + shape_str(t.shape()));
  }
}

std::vector<double> transposed(const double* src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  return out;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::constant(Shape shape, std::vector<double> data) {
  return Tensor(make_leaf(std::move(shape), std::move(data), false));
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = numel(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> data) {
  return Tensor(make_leaf(std::move(shape), std::move(data), true));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::dim(std::size_t axis) const { return node_->shape.at(axis); }
std::size_t Tensor::size() const { return node_->value.size(); }
std::span<const double> Tensor::data() const { return node_->value; }

std::span<double> Tensor::mutable_data() {
  if (!node_->is_leaf) throw std::logic_error("mutable_data on a non-leaf tensor");
  return node_->value;
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::has_grad() const { return node_->grad.size() == node_->value.size(); }
std::span<const double> Tensor::grad() const { return node_->grad; }
void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

// ---- kernels --------------------------------------------------------------

// Each output element accumulates its k products in ascending order, so a
// row's result does not depend on how many other rows share the call.
// The 4x8 register tile keeps that order; it only saves loads and stores.
void gemm_row(const double* arow, const double* b, double* __restrict crow, std::size_t k, std::size_t n,
              std::size_t j0) {
  for (std::size_t p = 0; p < k; ++p) {
    const double av = arow[p];
    const double* __restrict brow = b + p * n;
    for (std::size_t j = j0; j < n; ++j) crow[j] += av * brow[j];
  }
}

using v4d = double __attribute__((vector_size(32)));
inline v4d load4(const double* p) {
  v4d v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store4(double* p, v4d v) { std::memcpy(p, &v, sizeof v); }

void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  const std::size_t n8 = n / 8 * 8;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + i * k;
    double* c0 = c + i * n;
    for (std::size_t j = 0; j < n8; j += 8) {
      v4d t[4][2];
      for (int r = 0; r < 4; ++r) t[r][0] = load4(c0 + r * n + j), t[r][1] = load4(c0 + r * n + j + 4);
      for (std::size_t p = 0; p < k; ++p) {
        const v4d b0 = load4(b + p * n + j), b1 = load4(b + p * n + j + 4);
        for (int r = 0; r < 4; ++r) {
          const double x = a0[r * k + p];
          t[r][0] += x * b0;
          t[r][1] += x * b1;
        }
      }
      for (int r = 0; r < 4; ++r) store4(c0 + r * n + j, t[r][0]), store4(c0 + r * n + j + 4, t[r][1]);
    }
    if (n8 < n) {
      for (int r = 0; r < 4; ++r) gemm_row(a0 + r * k, b, c0 + r * n, k, n, n8);
    }
  }
  for (; i < m; ++i) gemm_row(a + i * k, b, c + i * n, k, n, 0);
}

// ---- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result("matmul", {m, n}, std::move(out), {a.node_ptr(), b.node_ptr()},
                     [m, k, n](Node& self) {
                       Node& A = *self.parents[0];
                       Node& B = *self.parents[1];
                       if (A.requires_grad) {
                         auto bt = transposed(B.value.data(), k, n);
                         gemm_acc(self.grad.data(), bt.data(), A.ensure_grad().data(), m, n, k);
                       }
                       if (B.requires_grad) {
                         auto at = transposed(A.value.data(), m, k);
                         gemm_acc(at.data(), self.grad.data(), B.ensure_grad().data(), k, m, n);
                       }
                     });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    shape_error("bmm", a.shape(), b.shape());
  }
  const std::size_t B = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  std::vector<double> out(B * m * n, 0.0);
  for (std::size_t i = 0; i < B; ++i) {
    gemm_acc(a.data().data() + i * m * k, b.data().data() + i * k * n, out.data() + i * m * n, m,
             k, n);
  }
  return make_result("bmm", {B, m, n}, std::move(out), {a.node_ptr(), b.node_ptr()},
                     [B, m, k, n](Node& self) {
                       Node& A = *self.parents[0];
                       Node& Bn = *self.parents[1];
                       for (std::size_t i = 0; i < B; ++i) {
                         const double* g = self.grad.data() + i * m * n;
                         if (A.requires_grad) {
                           auto bt = transposed(Bn.value.data() + i * k * n, k, n);
                           gemm_acc(g, bt.data(), A.ensure_grad().data() + i * m * k, m, n, k);
                         }
                         if (Bn.requires_grad) {
                           auto at = transposed(A.value.data() + i * m * k, m, k);
                           gemm_acc(at.data(), g, Bn.ensure_grad().data() + i * k * n, k, m, n);
                         }
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require_rank("transpose", a, 2);
  return permute(a, {1, 0});
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& perm) {
  const std::size_t r = a.rank();
  if (perm.size() != r) throw std::invalid_argument("permute: perm rank mismatch for " + shape_str(a.shape()));
  std::vector<bool> seen(r, false);
  for (auto p : perm) {
    if (p >= r || seen[p]) throw std::invalid_argument("permute: invalid permutation");
    seen[p] = true;
  }
  const Shape& in = a.shape();
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = in[perm[i]];
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  // src_index[j] = flat index in `a` of output element j.
  const std::size_t total = a.size();
  std::vector<std::size_t> src_index(total);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t j = 0; j < total; ++j) {
    std::size_t s = 0;
    for (std::size_t d = 0; d < r; ++d) s += idx[d] * in_stride[perm[d]];
    src_index[j] = s;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  std::vector<double> out(total);
  const auto src = a.data();
  for (std::size_t j = 0; j < total; ++j) out[j] = src[src_index[j]];
  return make_result("permute", std::move(out_shape), std::move(out), {a.node_ptr()},
                     [src_index = std::move(src_index)](Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t j = 0; j < src_index.size(); ++j) g[src_index[j]] += self.grad[j];
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) shape_error("reshape", a.shape(), shape);
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {a.node_ptr()}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

// ---- elementwise ----------------------------------------------------------

namespace {

// Broadcast kind for binary ops: identical shapes, or a 1-D rhs over the last axis.
bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return a.shape() != b.shape() && b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.dim(0);
}

template <class Fwd>
Tensor binary_same_or_row(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, double sign_b) {
  const bool row = is_row_broadcast(a, b);
  if (!row && a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
  const std::size_t n = a.size();
  const std::size_t w = b.size();
  std::vector<double> out(n);
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[row ? i % w : i]);
  return make_result(op, a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
                     [row, w, sign_b](Node& self) {
                       Node& A = *self.parents[0];
                       Node& B = *self.parents[1];
                       if (A.requires_grad) {
                         auto& g = A.ensure_grad();
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                       }
                       if (B.requires_grad) {
                         auto& g = B.ensure_grad();
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           g[row ? i % w : i] += sign_b * self.grad[i];
                         }
                       }
                     });
}

template <class Fwd, class Deriv>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Deriv deriv) {
  const std::size_t n = a.size();
  std::vector<double> out(n);
  const auto av = a.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
  return make_result(op, a.shape(), std::move(out), {a.node_ptr()}, [deriv](Node& self) {
    Node& A = *self.parents[0];
    auto& g = A.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(A.value[i], self.value[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_same_or_row("add", a, b, [](double x, double y) { return x + y; }, 1.0);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_same_or_row("sub", a, b, [](double x, double y) { return x - y; }, -1.0);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  const std::size_t n = a.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result("mul", a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()}, [](Node& self) {
    Node& A = *self.parents[0];
    Node& B = *self.parents[1];
    if (A.requires_grad) {
      auto& g = A.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * B.value[i];
    }
    if (B.requires_grad) {
      auto& g = B.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * A.value[i];
    }
  });
}

Tensor scalar_mul(const Tensor& a, double s) {
  return unary("scalar_mul", a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor abs(const Tensor& a) {
  return unary("abs", a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return unary(
      "sigmoid", a,
      [lo, hi](double x) {
        const double y = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        return std::clamp(y, lo, hi);
      },
      [](double, double y) { return y * (1.0 - y); });
}

// ---- structural -----------------------------------------------------------

namespace {
// Splits a shape around `axis` into (outer, axis length, inner).
struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};
AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}
}  // namespace

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& ref = parts[0].shape();
  if (axis >= ref.size()) throw std::invalid_argument("concat: axis out of range for " + shape_str(ref));
  Shape out_shape = ref;
  out_shape[axis] = 0;
  std::vector<std::size_t> lens;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != ref.size()) shape_error("concat", ref, s);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != ref[i]) shape_error("concat", ref, s);
    out_shape[axis] += s[axis];
    lens.push_back(s[axis]);
    parents.push_back(p.node_ptr());
  }
  const AxisSplit sp = split_axis(out_shape, axis);
  std::vector<double> out(numel(out_shape));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto src = parts[k].data();
    const std::size_t chunk = lens[k] * sp.inner;
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(src.data() + o * chunk, chunk, out.data() + o * sp.len * sp.inner + offset * sp.inner);
    }
    offset += lens[k];
  }
  return make_result("concat", out_shape, std::move(out), std::move(parents),
                     [sp, lens](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         Node& P = *self.parents[k];
                         const std::size_t chunk = lens[k] * sp.inner;
                         if (P.requires_grad) {
                           auto& g = P.ensure_grad();
                           for (std::size_t o = 0; o < sp.outer; ++o) {
                             const double* src = self.grad.data() + o * sp.len * sp.inner + offset * sp.inner;
                             for (std::size_t i = 0; i < chunk; ++i) g[o * chunk + i] += src[i];
                           }
                         }
                         offset += lens[k];
                       }
                     });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= a.rank() || begin >= end || end > a.dim(axis)) {
    throw std::invalid_argument("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                                ") on axis " + std::to_string(axis) + " invalid for " + shape_str(a.shape()));
  }
  const AxisSplit sp = split_axis(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = end - begin;
  const std::size_t chunk = (end - begin) * sp.inner;
  std::vector<double> out(sp.outer * chunk);
  const auto src = a.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(src.data() + o * sp.len * sp.inner + begin * sp.inner, chunk, out.data() + o * chunk);
  }
  return make_result("slice", std::move(out_shape), std::move(out), {a.node_ptr()},
                     [sp, chunk, begin](Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t o = 0; o < sp.outer; ++o) {
                         double* dst = g.data() + o * sp.len * sp.inner + begin * sp.inner;
                         for (std::size_t i = 0; i < chunk; ++i) dst[i] += self.grad[o * chunk + i];
                       }
                     });
}

// ---- reductions -----------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result("sum", {1}, {s}, {a.node_ptr()}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& x : g) x += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  const double n = static_cast<double>(a.size());
  return make_result("mean", {1}, {s / n}, {a.node_ptr()}, [n](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    const double d = self.grad[0] / n;
    for (auto& x : g) x += d;
  });
}

Tensor softmax(const Tensor& a) {
  if (a.rank() == 0) throw std::invalid_argument("softmax on rank-0 tensor");
  const std::size_t w = a.shape().back();
  const std::size_t rows = a.size() / w;
  std::vector<double> out(a.size());
  const auto src = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = src.data() + r * w;
    double* y = out.data() + r * w;
    const double mx = *std::max_element(x, x + w);
    double z = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < w; ++j) y[j] /= z;
  }
  return make_result("softmax", a.shape(), std::move(out), {a.node_ptr()}, [w, rows](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * w;
      const double* gy = self.grad.data() + r * w;
      double dot = 0.0;
      for (std::size_t j = 0; j < w; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < w; ++j) g[r * w + j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.rank() == 0 || gain.rank() != 1 || bias.rank() != 1 || gain.dim(0) != x.shape().back() ||
      bias.dim(0) != x.shape().back()) {
    shape_error("layer_norm", x.shape(), gain.shape());
  }
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const std::size_t w = x.shape().back();
  const std::size_t rows = x.size() / w;
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(rows);
  std::vector<double> out(x.size());
  const auto src = x.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = src.data() + r * w;
    double mu = 0.0;
    for (std::size_t j = 0; j < w; ++j) mu += xr[j];
    mu /= static_cast<double>(w);
    double var = 0.0;
    for (std::size_t j = 0; j < w; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(w);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < w; ++j) {
      const double xh = (xr[j] - mu) * is;
      xhat[r * w + j] = xh;
      out[r * w + j] = xh * gv[j] + bv[j];
    }
  }
  return make_result(
      "layer_norm", x.shape(), std::move(out), {x.node_ptr(), gain.node_ptr(), bias.node_ptr()},
      [w, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        Node& X = *self.parents[0];
        Node& G = *self.parents[1];
        Node& Bn = *self.parents[2];
        const double inv_w = 1.0 / static_cast<double>(w);
        if (G.requires_grad) {
          auto& gg = G.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < w; ++j) gg[j] += self.grad[r * w + j] * xhat[r * w + j];
        }
        if (Bn.requires_grad) {
          auto& gb = Bn.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < w; ++j) gb[j] += self.grad[r * w + j];
        }
        if (X.requires_grad) {
          auto& gx = X.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < w; ++j) {
              const double d = self.grad[r * w + j] * G.value[j];
              m1 += d;
              m2 += d * xhat[r * w + j];
            }
            m1 *= inv_w;
            m2 *= inv_w;
            for (std::size_t j = 0; j < w; ++j) {
              const double d = self.grad[r * w + j] * G.value[j];
              gx[r * w + j] += inv_std[r] * (d - m1 - xhat[r * w + j] * m2);
            }
          }
        }
      });
}

// ---- backward -------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  Node* root = loss.node();
  if (!root->requires_grad) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root};
  seen.insert(root);
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  // Reverse creation order is a valid topological order of the tape.
  std::sort(order.begin(), order.end(), [](const Node* a, const Node* b) { return a->seq > b->seq; });

  // Interior grads are per-pass scratch; leaves accumulate.
  for (Node* n : order)
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  root->ensure_grad()[0] += 1.0;
  for (Node* n : order) {
    if (n->is_leaf || !n->backward) continue;
    n->backward(*n);
    n->grad.clear();
    n->grad.shrink_to_fit();
  }
}

}  // namespace amsort::ad
