#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "qecclab/bits.hpp"
#include "qecclab/rng.hpp"

namespace qecclab {

/// Raised when a loss turns non-finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

namespace detail {

template <class T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily, always value.size() once present
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;

  std::span<T> grad_span() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Dense multi-axis array participating in a reverse-mode graph. Copying a
/// Tensor aliases the underlying node; ops build new nodes wired to their
/// inputs.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::TensorNode<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape) {
    auto node = std::make_shared<detail::TensorNode<T>>();
    node->value.assign(shape_numel(shape), T(0));
    node->shape = std::move(shape);
    return Tensor(std::move(node));
  }

  static Tensor constant(Shape shape, T fill) {
    Tensor t = zeros(std::move(shape));
    for (auto& v : t.node_->value) v = fill;
    return t;
  }

  static Tensor from_values(Shape shape, std::vector<T> values) {
    if (shape_numel(shape) != values.size())
      throw std::invalid_argument("Tensor::from_values: size mismatch");
    auto node = std::make_shared<detail::TensorNode<T>>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    return Tensor(std::move(node));
  }

  static Tensor scalar(T v) { return from_values({1}, {v}); }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }

  std::span<T> values() { return node_->value; }
  std::span<const T> values() const { return node_->value; }
  std::span<T> grad() { return node_->grad_span(); }
  bool has_grad() const { return !node_->grad.empty(); }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v = true) {
    node_->requires_grad = v;
    return *this;
  }

  T item() const {
    if (size() != 1) throw std::invalid_argument("item() needs a scalar tensor");
    return node_->value[0];
  }

  void zero_grad() {
    for (auto& g : node_->grad) g = T(0);
  }

  std::shared_ptr<detail::TensorNode<T>> node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode<T>> node_;
};

namespace detail {

template <class T>
Tensor<T> make_op(Shape shape, std::vector<std::shared_ptr<TensorNode<T>>> parents,
                  std::function<void(TensorNode<T>&)> backward) {
  auto node = std::make_shared<TensorNode<T>>();
  node->value.assign(shape_numel(shape), T(0));
  node->shape = std::move(shape);
  for (auto& p : parents) node->requires_grad |= p->requires_grad;
  node->parents = std::move(parents);
  if (node->requires_grad) node->backward = std::move(backward);
  return Tensor<T>(std::move(node));
}

}  // namespace detail

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
/// reachable tensor that requires them; calling backward twice without
/// zeroing doubles the gradients.
template <class T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1) throw std::invalid_argument("backward() needs a scalar loss");
  using Node = detail::TensorNode<T>;
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Computed nodes get a fresh gradient each sweep; only leaves accumulate.
  for (Node* node : order)
    if (node->backward)
      for (auto& g : node->grad_span()) g = T(0);
  loss.node()->grad_span()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

// ---------------------------------------------------------------------------
// Elementwise and shape ops
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  auto an = a.node(), bn = b.node();
  auto out = detail::make_op<T>(
      a.shape(), {an, bn}, [an, bn](detail::TensorNode<T>& self) {
        std::span<const T> g = self.grad;
        if (an->requires_grad) {
          auto ga = an->grad_span();
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (bn->requires_grad) {
          auto gb = bn->grad_span();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
      });
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = an->value[i] + bn->value[i];
  return out;
}

/// x + bias where bias has the length of x's last axis.
template <class T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  if (bias.rank() != 1 || x.dim(x.rank() - 1) != bias.dim(0))
    throw std::invalid_argument("add_bias: bias must match last axis");
  auto xn = x.node(), bn = bias.node();
  const std::size_t d = bias.dim(0);
  auto out = detail::make_op<T>(
      x.shape(), {xn, bn}, [xn, bn, d](detail::TensorNode<T>& self) {
        std::span<const T> g = self.grad;
        if (xn->requires_grad) {
          auto gx = xn->grad_span();
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (bn->requires_grad) {
          auto gb = bn->grad_span();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
        }
      });
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xn->value[i] + bn->value[i % d];
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("mul: shape mismatch");
  auto an = a.node(), bn = b.node();
  auto out = detail::make_op<T>(
      a.shape(), {an, bn}, [an, bn](detail::TensorNode<T>& self) {
        std::span<const T> g = self.grad;
        if (an->requires_grad) {
          auto ga = an->grad_span();
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bn->value[i];
        }
        if (bn->requires_grad) {
          auto gb = bn->grad_span();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * an->value[i];
        }
      });
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = an->value[i] * bn->value[i];
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T c) {
  auto xn = x.node();
  auto out = detail::make_op<T>(x.shape(), {xn}, [xn, c](detail::TensorNode<T>& self) {
    auto gx = xn->grad_span();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * c;
  });
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xn->value[i] * c;
  return out;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  auto xn = x.node();
  auto out = detail::make_op<T>(x.shape(), {xn}, [xn](detail::TensorNode<T>& self) {
    auto gx = xn->grad_span();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      T s = self.value[i];
      gx[i] += self.grad[i] * s * (T(1) - s);
    }
  });
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = T(1) / (T(1) + std::exp(-xn->value[i]));
  return out;
}

/// Exact GELU: x * Phi(x) with the Gaussian CDF.
template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  auto xn = x.node();
  auto out = detail::make_op<T>(x.shape(), {xn}, [xn](detail::TensorNode<T>& self) {
    constexpr T inv_sqrt2 = T(0.7071067811865475244);
    constexpr T inv_sqrt2pi = T(0.3989422804014326779);
    auto gx = xn->grad_span();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      T xv = xn->value[i];
      T cdf = T(0.5) * (T(1) + std::erf(xv * inv_sqrt2));
      T pdf = inv_sqrt2pi * std::exp(T(-0.5) * xv * xv);
      gx[i] += self.grad[i] * (cdf + xv * pdf);
    }
  });
  auto v = out.values();
  constexpr T inv_sqrt2 = T(0.7071067811865475244);
  for (std::size_t i = 0; i < v.size(); ++i) {
    T xv = xn->value[i];
    v[i] = T(0.5) * xv * (T(1) + std::erf(xv * inv_sqrt2));
  }
  return out;
}

template <class T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.size()) throw std::invalid_argument("reshape: element count changed");
  auto xn = x.node();
  auto out = detail::make_op<T>(std::move(shape), {xn}, [xn](detail::TensorNode<T>& self) {
    auto gx = xn->grad_span();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
  auto v = out.values();
  std::copy(xn->value.begin(), xn->value.end(), v.begin());
  return out;
}

/// Swap axes 1 and 2 of a rank-4 tensor; the head split/merge step.
template <class T>
Tensor<T> swap_axes_1_2(const Tensor<T>& x) {
  if (x.rank() != 4) throw std::invalid_argument("swap_axes_1_2 needs rank 4");
  const std::size_t b = x.dim(0), s = x.dim(1), h = x.dim(2), d = x.dim(3);
  auto xn = x.node();
  auto out = detail::make_op<T>(
      {b, h, s, d}, {xn}, [xn, b, s, h, d](detail::TensorNode<T>& self) {
        auto gx = xn->grad_span();
        for (std::size_t bi = 0; bi < b; ++bi)
          for (std::size_t hi = 0; hi < h; ++hi)
            for (std::size_t si = 0; si < s; ++si) {
              const T* src = self.grad.data() + (((bi * h + hi) * s + si) * d);
              T* dst = gx.data() + (((bi * s + si) * h + hi) * d);
              for (std::size_t di = 0; di < d; ++di) dst[di] += src[di];
            }
      });
  auto v = out.values();
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t si = 0; si < s; ++si)
      for (std::size_t hi = 0; hi < h; ++hi) {
        const T* src = xn->value.data() + (((bi * s + si) * h + hi) * d);
        T* dst = v.data() + (((bi * h + hi) * s + si) * d);
        for (std::size_t di = 0; di < d; ++di) dst[di] = src[di];
      }
  return out;
}

template <class T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != b.rank()) throw std::invalid_argument("concat_last: rank mismatch");
  for (std::size_t i = 0; i + 1 < a.rank(); ++i)
    if (a.dim(i) != b.dim(i)) throw std::invalid_argument("concat_last: leading dims differ");
  Shape shape = a.shape();
  const std::size_t da = a.dim(a.rank() - 1), db = b.dim(b.rank() - 1);
  shape.back() = da + db;
  const std::size_t rows = a.size() / da;
  auto an = a.node(), bn = b.node();
  auto out = detail::make_op<T>(
      std::move(shape), {an, bn}, [an, bn, rows, da, db](detail::TensorNode<T>& self) {
        for (std::size_t r = 0; r < rows; ++r) {
          const T* g = self.grad.data() + r * (da + db);
          if (an->requires_grad) {
            auto ga = an->grad_span();
            for (std::size_t i = 0; i < da; ++i) ga[r * da + i] += g[i];
          }
          if (bn->requires_grad) {
            auto gb = bn->grad_span();
            for (std::size_t i = 0; i < db; ++i) gb[r * db + i] += g[da + i];
          }
        }
      });
  auto v = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    T* dst = v.data() + r * (da + db);
    for (std::size_t i = 0; i < da; ++i) dst[i] = an->value[r * da + i];
    for (std::size_t i = 0; i < db; ++i) dst[da + i] = bn->value[r * db + i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
void gemm(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = out + i * n;
    const T* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out(m,n) += a(m,k) * b(n,k)^T
template <class T>
void gemm_bt(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* orow = out + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = T(0);
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      orow[j] += acc;
    }
  }
}

// out(k,n) += a(m,k)^T * b(m,n)
template <class T>
void gemm_at(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      T* orow = out + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

/// a @ b. `a` is (..., M, K); `b` is either (K, N), applied to every leading
/// batch of `a`, or (..., K, N) with identical leading dims.
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) throw std::invalid_argument("matmul: rank too small");
  const std::size_t m = a.dim(a.rank() - 2), k = a.dim(a.rank() - 1);
  const bool shared_b = b.rank() == 2;
  if (shared_b) {
    if (b.dim(0) != k) throw std::invalid_argument("matmul: inner dims differ");
  } else {
    if (b.rank() != a.rank() || b.dim(b.rank() - 2) != k)
      throw std::invalid_argument("matmul: inner dims differ");
    for (std::size_t i = 0; i + 2 < a.rank(); ++i)
      if (a.dim(i) != b.dim(i)) throw std::invalid_argument("matmul: batch dims differ");
  }
  const std::size_t n = b.dim(b.rank() - 1);
  const std::size_t batches = a.size() / (m * k);

  Shape shape = a.shape();
  shape.back() = n;
  auto an = a.node(), bn = b.node();
  auto out = detail::make_op<T>(
      std::move(shape), {an, bn},
      [an, bn, m, k, n, batches, shared_b](detail::TensorNode<T>& self) {
        for (std::size_t bt = 0; bt < batches; ++bt) {
          const T* g = self.grad.data() + bt * m * n;
          const T* av = an->value.data() + bt * m * k;
          const T* bv = bn->value.data() + (shared_b ? 0 : bt * k * n);
          if (an->requires_grad) {
            T* ga = an->grad_span().data() + bt * m * k;
            detail::gemm_bt(g, bv, ga, m, n, k);  // g(m,n) * b(k,n)^T
          }
          if (bn->requires_grad) {
            T* gb = bn->grad_span().data() + (shared_b ? 0 : bt * k * n);
            detail::gemm_at(av, g, gb, m, k, n);  // a(m,k)^T * g(m,n)
          }
        }
      });
  auto v = out.values();
  for (std::size_t bt = 0; bt < batches; ++bt)
    detail::gemm(an->value.data() + bt * m * k, bn->value.data() + (shared_b ? 0 : bt * k * n),
                 v.data() + bt * m * n, m, k, n);
  return out;
}

/// a @ b^T over the last two axes; both (..., M, K) and (..., N, K) with
/// identical leading dims. Attention scores use this directly.
template <class T>
Tensor<T> matmul_transb(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != b.rank() || a.rank() < 2) throw std::invalid_argument("matmul_transb: rank mismatch");
  const std::size_t m = a.dim(a.rank() - 2), k = a.dim(a.rank() - 1);
  const std::size_t n = b.dim(b.rank() - 2);
  if (b.dim(b.rank() - 1) != k) throw std::invalid_argument("matmul_transb: inner dims differ");
  for (std::size_t i = 0; i + 2 < a.rank(); ++i)
    if (a.dim(i) != b.dim(i)) throw std::invalid_argument("matmul_transb: batch dims differ");
  const std::size_t batches = a.size() / (m * k);

  Shape shape = a.shape();
  shape[shape.size() - 2] = m;
  shape.back() = n;
  auto an = a.node(), bn = b.node();
  auto out = detail::make_op<T>(
      std::move(shape), {an, bn}, [an, bn, m, k, n, batches](detail::TensorNode<T>& self) {
        for (std::size_t bt = 0; bt < batches; ++bt) {
          const T* g = self.grad.data() + bt * m * n;
          const T* av = an->value.data() + bt * m * k;
          const T* bv = bn->value.data() + bt * n * k;
          if (an->requires_grad) {
            T* ga = an->grad_span().data() + bt * m * k;
            detail::gemm(g, bv, ga, m, n, k);  // g(m,n) * b(n,k)
          }
          if (bn->requires_grad) {
            T* gb = bn->grad_span().data() + bt * n * k;
            detail::gemm_at(g, av, gb, m, n, k);  // g(m,n)^T * a(m,k)
          }
        }
      });
  auto v = out.values();
  for (std::size_t bt = 0; bt < batches; ++bt)
    detail::gemm_bt(an->value.data() + bt * m * k, bn->value.data() + bt * n * k,
                    v.data() + bt * m * n, m, k, n);
  return out;
}

// ---------------------------------------------------------------------------
// Normalization, softmax, reductions
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5)) {
  const std::size_t d = x.dim(x.rank() - 1);
  if (gamma.rank() != 1 || gamma.dim(0) != d || beta.rank() != 1 || beta.dim(0) != d)
    throw std::invalid_argument("layer_norm: affine params must match last axis");
  const std::size_t rows = x.size() / d;
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  auto out = detail::make_op<T>(
      x.shape(), {xn, gn, bn}, [xn, gn, bn, rows, d, eps](detail::TensorNode<T>& self) {
        for (std::size_t r = 0; r < rows; ++r) {
          const T* xv = xn->value.data() + r * d;
          const T* g = self.grad.data() + r * d;
          T mean = T(0);
          for (std::size_t i = 0; i < d; ++i) mean += xv[i];
          mean /= T(d);
          T var = T(0);
          for (std::size_t i = 0; i < d; ++i) var += (xv[i] - mean) * (xv[i] - mean);
          var /= T(d);
          T inv_std = T(1) / std::sqrt(var + eps);
          // h = g * gamma; dx = (h - mean(h) - xhat * mean(h*xhat)) / std
          T h_mean = T(0), hx_mean = T(0);
          for (std::size_t i = 0; i < d; ++i) {
            T xhat = (xv[i] - mean) * inv_std;
            T h = g[i] * gn->value[i];
            h_mean += h;
            hx_mean += h * xhat;
          }
          h_mean /= T(d);
          hx_mean /= T(d);
          if (xn->requires_grad) {
            T* gx = xn->grad_span().data() + r * d;
            for (std::size_t i = 0; i < d; ++i) {
              T xhat = (xv[i] - mean) * inv_std;
              gx[i] += (g[i] * gn->value[i] - h_mean - xhat * hx_mean) * inv_std;
            }
          }
          if (gn->requires_grad) {
            auto gg = gn->grad_span();
            for (std::size_t i = 0; i < d; ++i) gg[i] += g[i] * (xv[i] - mean) * inv_std;
          }
          if (bn->requires_grad) {
            auto gbeta = bn->grad_span();
            for (std::size_t i = 0; i < d; ++i) gbeta[i] += g[i];
          }
        }
      });
  auto v = out.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xv = xn->value.data() + r * d;
    T* ov = v.data() + r * d;
    T mean = T(0);
    for (std::size_t i = 0; i < d; ++i) mean += xv[i];
    mean /= T(d);
    T var = T(0);
    for (std::size_t i = 0; i < d; ++i) var += (xv[i] - mean) * (xv[i] - mean);
    var /= T(d);
    T inv_std = T(1) / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i)
      ov[i] = gn->value[i] * (xv[i] - mean) * inv_std + bn->value[i];
  }
  return out;
}

/// Softmax over the last axis with an optional additive binary mask: masked
/// pairs receive -1e9 before normalization, which underflows to exactly zero
/// probability. With a mask the last two axes must match its dimensions.
template <class T>
Tensor<T> masked_softmax(const Tensor<T>& x, const BitMatrix* mask = nullptr) {
  const std::size_t d = x.dim(x.rank() - 1);
  const std::size_t rows = x.size() / d;
  std::size_t mask_rows = 1;
  if (mask) {
    if (x.rank() < 2 || x.dim(x.rank() - 2) != mask->rows() || d != mask->cols())
      throw std::invalid_argument("masked_softmax: mask does not match trailing axes");
    mask_rows = mask->rows();
  }
  auto xn = x.node();
  auto out = detail::make_op<T>(
      x.shape(), {xn}, [xn, rows, d](detail::TensorNode<T>& self) {
        if (!xn->requires_grad) return;
        auto gx = xn->grad_span();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* p = self.value.data() + r * d;
          const T* g = self.grad.data() + r * d;
          T dot = T(0);
          for (std::size_t i = 0; i < d; ++i) dot += g[i] * p[i];
          T* gxr = gx.data() + r * d;
          for (std::size_t i = 0; i < d; ++i) gxr[i] += p[i] * (g[i] - dot);
        }
      });
  auto v = out.values();
  // Flat additive mask rows: 0 where attention is allowed, -1e9 otherwise.
  std::vector<T> additive;
  if (mask) {
    additive.assign(mask_rows * d, T(0));
    for (std::size_t r = 0; r < mask_rows; ++r)
      for (std::size_t i = 0; i < d; ++i)
        if (!mask->get(r, i)) additive[r * d + i] = T(-1e9);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xv = xn->value.data() + r * d;
    const T* madd = mask ? additive.data() + (r % mask_rows) * d : nullptr;
    T* ov = v.data() + r * d;
    T max = -std::numeric_limits<T>::infinity();
    for (std::size_t i = 0; i < d; ++i) {
      T s = xv[i] + (madd ? madd[i] : T(0));
      ov[i] = s;
      if (s > max) max = s;
    }
    T sum = T(0);
    for (std::size_t i = 0; i < d; ++i) {
      ov[i] = std::exp(ov[i] - max);
      sum += ov[i];
    }
    T inv = T(1) / sum;
    for (std::size_t i = 0; i < d; ++i) ov[i] *= inv;
  }
  return out;
}

namespace detail {

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
};

inline AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) throw std::invalid_argument("axis out of range");
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

inline Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (i != axis) out.push_back(shape[i]);
  if (out.empty()) out.push_back(1);
  return out;
}

}  // namespace detail

template <class T>
Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis) {
  auto sp = detail::split_axis(x.shape(), axis);
  auto xn = x.node();
  auto out = detail::make_op<T>(
      detail::drop_axis(x.shape(), axis), {xn}, [xn, sp](detail::TensorNode<T>& self) {
        auto gx = xn->grad_span();
        const T inv = T(1) / T(sp.len);
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t a = 0; a < sp.len; ++a)
            for (std::size_t i = 0; i < sp.inner; ++i)
              gx[(o * sp.len + a) * sp.inner + i] += self.grad[o * sp.inner + i] * inv;
      });
  auto v = out.values();
  const T inv = T(1) / T(sp.len);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      T acc = T(0);
      for (std::size_t a = 0; a < sp.len; ++a) acc += xn->value[(o * sp.len + a) * sp.inner + i];
      v[o * sp.inner + i] = acc * inv;
    }
  return out;
}

/// Product over one axis. The backward pass divides the product back out and
/// falls back to leave-one-out products when factors are exactly zero.
template <class T>
Tensor<T> prod_axis(const Tensor<T>& x, std::size_t axis) {
  auto sp = detail::split_axis(x.shape(), axis);
  auto xn = x.node();
  auto out = detail::make_op<T>(
      detail::drop_axis(x.shape(), axis), {xn}, [xn, sp](detail::TensorNode<T>& self) {
        auto gx = xn->grad_span();
        for (std::size_t o = 0; o < sp.outer; ++o)
          for (std::size_t i = 0; i < sp.inner; ++i) {
            std::size_t zeros = 0, zero_at = 0;
            T prod_nz = T(1);
            for (std::size_t a = 0; a < sp.len; ++a) {
              T f = xn->value[(o * sp.len + a) * sp.inner + i];
              if (f == T(0)) {
                if (++zeros > 1) break;
                zero_at = a;
              } else {
                prod_nz *= f;
              }
            }
            if (zeros > 1) continue;
            T g = self.grad[o * sp.inner + i];
            if (zeros == 1) {
              gx[(o * sp.len + zero_at) * sp.inner + i] += g * prod_nz;
              continue;
            }
            for (std::size_t a = 0; a < sp.len; ++a) {
              T f = xn->value[(o * sp.len + a) * sp.inner + i];
              gx[(o * sp.len + a) * sp.inner + i] += g * prod_nz / f;
            }
          }
      });
  auto v = out.values();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t i = 0; i < sp.inner; ++i) {
      T acc = T(1);
      for (std::size_t a = 0; a < sp.len; ++a) acc *= xn->value[(o * sp.len + a) * sp.inner + i];
      v[o * sp.inner + i] = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Mean binary cross entropy on logits (numerically stable form). Targets are
/// treated as constants.
template <class T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets) {
  if (logits.shape() != targets.shape()) throw std::invalid_argument("bce_with_logits: shape mismatch");
  auto zn = logits.node(), yn = targets.node();
  const std::size_t count = logits.size();
  auto out = detail::make_op<T>(
      {1}, {zn, yn}, [zn, yn, count](detail::TensorNode<T>& self) {
        if (!zn->requires_grad) return;
        auto gz = zn->grad_span();
        const T g = self.grad[0] / T(count);
        for (std::size_t i = 0; i < count; ++i) {
          T s = T(1) / (T(1) + std::exp(-zn->value[i]));
          gz[i] += g * (s - yn->value[i]);
        }
      });
  T acc = T(0);
  for (std::size_t i = 0; i < count; ++i) {
    T z = zn->value[i], y = yn->value[i];
    acc += std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  T loss = acc / T(count);
  if (!std::isfinite(loss)) throw NumericError("bce_with_logits produced a non-finite loss");
  out.values()[0] = loss;
  return out;
}

/// Mean binary cross entropy on probabilities, clamped 1e-7 away from {0,1}
/// (the differentiable XOR reaches the exact endpoints). The clamp is
/// straight-through for gradients.
template <class T>
Tensor<T> bce_probs(const Tensor<T>& probs, const Tensor<T>& targets) {
  if (probs.shape() != targets.shape()) throw std::invalid_argument("bce_probs: shape mismatch");
  auto pn = probs.node(), yn = targets.node();
  const std::size_t count = probs.size();
  const T eps = T(1e-7);
  auto out = detail::make_op<T>(
      {1}, {pn, yn}, [pn, yn, count, eps](detail::TensorNode<T>& self) {
        if (!pn->requires_grad) return;
        auto gp = pn->grad_span();
        const T g = self.grad[0] / T(count);
        for (std::size_t i = 0; i < count; ++i) {
          T p = std::min(std::max(pn->value[i], eps), T(1) - eps);
          gp[i] += g * (p - yn->value[i]) / (p * (T(1) - p));
        }
      });
  T acc = T(0);
  for (std::size_t i = 0; i < count; ++i) {
    T p = std::min(std::max(pn->value[i], eps), T(1) - eps);
    T y = yn->value[i];
    acc += -y * std::log(p) - (T(1) - y) * std::log(T(1) - p);
  }
  T loss = acc / T(count);
  if (!std::isfinite(loss)) throw NumericError("bce_probs produced a non-finite loss");
  out.values()[0] = loss;
  return out;
}

// ---------------------------------------------------------------------------
// Workbench-specific ops
// ---------------------------------------------------------------------------

/// Scaled positional embedding: out[b,i,:] = x[b,i] * w[i,:].
template <class T>
Tensor<T> embed_scale(const Tensor<T>& x, const Tensor<T>& w) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
    throw std::invalid_argument("embed_scale: expects x (B,S) and w (S,D)");
  const std::size_t b = x.dim(0), s = x.dim(1), d = w.dim(1);
  auto xn = x.node(), wn = w.node();
  auto out = detail::make_op<T>(
      {b, s, d}, {xn, wn}, [xn, wn, b, s, d](detail::TensorNode<T>& self) {
        for (std::size_t bi = 0; bi < b; ++bi)
          for (std::size_t si = 0; si < s; ++si) {
            const T* g = self.grad.data() + (bi * s + si) * d;
            const T xv = xn->value[bi * s + si];
            if (wn->requires_grad) {
              T* gw = wn->grad_span().data() + si * d;
              for (std::size_t di = 0; di < d; ++di) gw[di] += g[di] * xv;
            }
            if (xn->requires_grad) {
              const T* wv = wn->value.data() + si * d;
              T acc = T(0);
              for (std::size_t di = 0; di < d; ++di) acc += g[di] * wv[di];
              xn->grad_span()[bi * s + si] += acc;
            }
          }
      });
  auto v = out.values();
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t si = 0; si < s; ++si) {
      const T xv = xn->value[bi * s + si];
      const T* wv = wn->value.data() + si * d;
      T* dst = v.data() + (bi * s + si) * d;
      for (std::size_t di = 0; di < d; ++di) dst[di] = xv * wv[di];
    }
  return out;
}

/// Differentiable GF(2) projection: row k of the output is
/// 1/2 - 1/2 * prod_{j in supp(L_k)} (1 - 2 x_j), which equals the XOR of the
/// selected bits when x is binary. Zero factors use leave-one-out products in
/// the backward pass.
template <class T>
Tensor<T> xor_projection(const Tensor<T>& x, const BitMatrix& rows) {
  if (x.rank() != 2 || x.dim(1) != rows.cols())
    throw std::invalid_argument("xor_projection: expects x (B,n) matching the matrix columns");
  const std::size_t b = x.dim(0), k = rows.rows();
  auto support = std::make_shared<std::vector<std::vector<std::uint32_t>>>(k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < rows.cols(); ++c)
      if (rows.get(r, c)) (*support)[r].push_back(static_cast<std::uint32_t>(c));

  auto xn = x.node();
  const std::size_t n = x.dim(1);
  auto out = detail::make_op<T>(
      {b, k}, {xn}, [xn, support, b, k, n](detail::TensorNode<T>& self) {
        if (!xn->requires_grad) return;
        auto gx = xn->grad_span();
        for (std::size_t bi = 0; bi < b; ++bi) {
          const T* xv = xn->value.data() + bi * n;
          for (std::size_t r = 0; r < k; ++r) {
            const auto& supp = (*support)[r];
            const T g = self.grad[bi * k + r];
            if (g == T(0) || supp.empty()) continue;
            std::size_t zeros = 0, zero_at = 0;
            T prod_nz = T(1);
            for (std::size_t j : supp) {
              T f = T(1) - T(2) * xv[j];
              if (f == T(0)) {
                if (++zeros > 1) break;
                zero_at = j;
              } else {
                prod_nz *= f;
              }
            }
            if (zeros > 1) continue;
            // d out / d x_j = prod_{l != j} (1 - 2 x_l)
            if (zeros == 1) {
              gx[bi * n + zero_at] += g * prod_nz;
              continue;
            }
            for (std::size_t j : supp) {
              T f = T(1) - T(2) * xv[j];
              gx[bi * n + j] += g * prod_nz / f;
            }
          }
        }
      });
  auto v = out.values();
  for (std::size_t bi = 0; bi < b; ++bi) {
    const T* xv = xn->value.data() + bi * n;
    for (std::size_t r = 0; r < k; ++r) {
      T prod = T(1);
      for (std::size_t j : (*support)[r]) prod *= T(1) - T(2) * xv[j];
      v[bi * k + r] = T(0.5) - T(0.5) * prod;
    }
  }
  return out;
}

/// Straight-through hard threshold at 1/2: forward rounds, backward passes
/// gradients unchanged.
template <class T>
Tensor<T> ste_round(const Tensor<T>& x) {
  auto xn = x.node();
  auto out = detail::make_op<T>(x.shape(), {xn}, [xn](detail::TensorNode<T>& self) {
    auto gx = xn->grad_span();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
  auto v = out.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = xn->value[i] > T(0.5) ? T(1) : T(0);
  return out;
}

}  // namespace qecclab
