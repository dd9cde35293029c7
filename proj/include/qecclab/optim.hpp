#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qecclab/tensor.hpp"

namespace qecclab {

/// Named, ordered model parameters. The order is the checkpoint and optimizer
/// state layout, so it must be construction-stable.
template <class T>
struct ParamStore {
  std::vector<std::pair<std::string, Tensor<T>>> items;

  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    t.set_requires_grad(true);
    items.emplace_back(name, std::move(t));
    return items.back().second;
  }

  Tensor<T>* find(const std::string& name) {
    for (auto& [n, t] : items)
      if (n == name) return &t;
    return nullptr;
  }

  void zero_grads() {
    for (auto& [n, t] : items) t.zero_grad();
  }

  std::size_t count_values() const {
    std::size_t c = 0;
    for (const auto& [n, t] : items) c += t.size();
    return c;
  }

  double grad_norm() const {
    double acc = 0;
    for (const auto& [n, t] : items) {
      if (!t.has_grad()) continue;
      auto node = t.node();
      for (T g : node->grad) acc += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(acc);
  }
};

/// Cosine decay from lr0 to lr_min over t_max steps.
struct CosineSchedule {
  double lr0 = 5e-4;
  double lr_min = 5e-7;
  std::int64_t t_max = 1;

  double at(std::int64_t t) const {
    if (t >= t_max) return lr_min;
    double c = std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(t_max));
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + c);
  }
};

/// Standard Adam (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) with bias-corrected
/// moments. Moment buffers are keyed by parameter order.
template <class T>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  std::int64_t step_count() const { return step_; }

  void step(ParamStore<T>& params, double lr) {
    if (m_.empty()) {
      m_.resize(params.items.size());
      v_.resize(params.items.size());
      for (std::size_t i = 0; i < params.items.size(); ++i) {
        m_[i].assign(params.items[i].second.size(), T(0));
        v_[i].assign(params.items[i].second.size(), T(0));
      }
    }
    if (m_.size() != params.items.size()) throw std::invalid_argument("adam: parameter set changed");
    ++step_;
    const T b1 = T(beta1_), b2 = T(beta2_);
    const T corr1 = T(1) - static_cast<T>(std::pow(beta1_, static_cast<double>(step_)));
    const T corr2 = T(1) - static_cast<T>(std::pow(beta2_, static_cast<double>(step_)));
    for (std::size_t i = 0; i < params.items.size(); ++i) {
      Tensor<T>& p = params.items[i].second;
      if (!p.has_grad()) continue;
      auto node = p.node();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < node->value.size(); ++j) {
        T g = node->grad[j];
        m[j] = b1 * m[j] + (T(1) - b1) * g;
        v[j] = b2 * v[j] + (T(1) - b2) * g * g;
        T mhat = m[j] / corr1;
        T vhat = v[j] / corr2;
        node->value[j] -= T(lr) * mhat / (std::sqrt(vhat) + T(eps_));
      }
    }
  }

 private:
  double beta1_, beta2_, eps_;
  std::int64_t step_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

// ---------------------------------------------------------------------------
// "QCKPT" checkpoint container: magic, u32 record count, then per tensor
// (u32 name length, name bytes, u8 dtype, u8 rank, u64 dims..., payload as
// little-endian IEEE words). Reload is bit-exact.
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
constexpr std::uint8_t dtype_tag();
template <>
constexpr std::uint8_t dtype_tag<float>() {
  return 0;
}
template <>
constexpr std::uint8_t dtype_tag<double>() {
  return 1;
}

template <class T>
void write_scalar_bits(std::ostream& os, T v) {
  if constexpr (sizeof(T) == 4) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    io::write_u32(os, bits);
  } else {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    io::write_u64(os, bits);
  }
}

template <class T>
T read_scalar_bits(std::istream& is) {
  T v;
  if constexpr (sizeof(T) == 4) {
    std::uint32_t bits = io::read_u32(is);
    std::memcpy(&v, &bits, 4);
  } else {
    std::uint64_t bits = io::read_u64(is);
    std::memcpy(&v, &bits, 8);
  }
  return v;
}

}  // namespace detail

template <class T>
void save_checkpoint(std::ostream& os, const ParamStore<T>& params) {
  os.write("QCKPT", 5);
  io::write_u32(os, static_cast<std::uint32_t>(params.items.size()));
  for (const auto& [name, t] : params.items) {
    io::write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(static_cast<char>(detail::dtype_tag<T>()));
    os.put(static_cast<char>(t.rank()));
    for (std::size_t d : t.shape()) io::write_u64(os, d);
    for (T v : t.values()) detail::write_scalar_bits(os, v);
  }
}

template <class T>
void save_checkpoint(const std::string& path, const ParamStore<T>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  save_checkpoint(os, params);
}

/// Loads values into an existing store; names, order and shapes must match.
template <class T>
void load_checkpoint(std::istream& is, ParamStore<T>& params) {
  char magic[5];
  is.read(magic, 5);
  if (!is || std::memcmp(magic, "QCKPT", 5) != 0) throw std::runtime_error("bad checkpoint magic");
  std::uint32_t count = io::read_u32(is);
  if (count != params.items.size()) throw std::runtime_error("checkpoint: record count mismatch");
  for (auto& [name, t] : params.items) {
    std::uint32_t len = io::read_u32(is);
    std::string got(len, '\0');
    is.read(got.data(), len);
    if (got != name) throw std::runtime_error("checkpoint: expected tensor " + name + ", found " + got);
    int dtype = is.get();
    if (dtype != detail::dtype_tag<T>()) throw std::runtime_error("checkpoint: dtype mismatch");
    int rank = is.get();
    if (rank != static_cast<int>(t.rank())) throw std::runtime_error("checkpoint: rank mismatch");
    for (std::size_t i = 0; i < t.rank(); ++i)
      if (io::read_u64(is) != t.dim(i)) throw std::runtime_error("checkpoint: shape mismatch");
    for (auto& v : t.values()) v = detail::read_scalar_bits<T>(is);
  }
}

template <class T>
void load_checkpoint(const std::string& path, ParamStore<T>& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  load_checkpoint(is, params);
}

// Deterministic initializers.

template <class T>
Tensor<T> xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor<T> t = Tensor<T>::zeros(std::move(shape));
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-a, a));
  return t;
}

template <class T>
Tensor<T> normal_init(Shape shape, double stddev, Rng& rng) {
  Tensor<T> t = Tensor<T>::zeros(std::move(shape));
  // Box-Muller on the deterministic stream.
  bool have = false;
  double spare = 0;
  for (auto& v : t.values()) {
    if (have) {
      v = static_cast<T>(spare * stddev);
      have = false;
      continue;
    }
    double u1 = rng.next_double(), u2 = rng.next_double();
    while (u1 <= 1e-300) u1 = rng.next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    v = static_cast<T>(r * std::cos(2.0 * std::numbers::pi * u2) * stddev);
    spare = r * std::sin(2.0 * std::numbers::pi * u2);
    have = true;
  }
  return t;
}

}  // namespace qecclab
