#pragma once

// Test-only reference implementations, deliberately independent of the
// library's packed/optimized code paths.

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "qecclab/bits.hpp"
#include "qecclab/rng.hpp"

namespace qecclab::testing {

using IntMatrix = std::vector<std::vector<int>>;
using IntVector = std::vector<int>;

inline IntVector int_matvec_mod2(const IntMatrix& m, const IntVector& v) {
  IntVector out(m.size(), 0);
  for (std::size_t r = 0; r < m.size(); ++r) {
    int acc = 0;
    for (std::size_t c = 0; c < v.size(); ++c) acc += m[r][c] * v[c];
    out[r] = acc % 2;
  }
  return out;
}

inline int int_rank_mod2(IntMatrix m) {
  if (m.empty()) return 0;
  std::size_t rows = m.size(), cols = m[0].size();
  int rank = 0;
  for (std::size_t c = 0; c < cols && static_cast<std::size_t>(rank) < rows; ++c) {
    std::size_t pivot = rows;
    for (std::size_t r = rank; r < rows; ++r)
      if (m[r][c] % 2) {
        pivot = r;
        break;
      }
    if (pivot == rows) continue;
    std::swap(m[rank], m[pivot]);
    for (std::size_t r = 0; r < rows; ++r)
      if (r != static_cast<std::size_t>(rank) && m[r][c] % 2)
        for (std::size_t k = 0; k < cols; ++k) m[r][k] = (m[r][k] + m[rank][k]) % 2;
    ++rank;
  }
  return rank;
}

inline BitMatrix random_bitmatrix(std::size_t rows, std::size_t cols, Rng& rng, double density = 0.5) {
  BitMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (rng.bernoulli(density)) m.set(r, c, true);
  return m;
}

inline BitVector random_bitvector(std::size_t len, Rng& rng, double density = 0.5) {
  BitVector v(len);
  for (std::size_t i = 0; i < len; ++i)
    if (rng.bernoulli(density)) v.set(i, true);
  return v;
}

inline IntMatrix to_int(const BitMatrix& m) {
  IntMatrix out(m.rows(), IntVector(m.cols(), 0));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m.get(r, c) ? 1 : 0;
  return out;
}

inline IntVector to_int(const BitVector& v) {
  IntVector out(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v.get(i) ? 1 : 0;
  return out;
}

inline BitVector from_int(const IntVector& v) {
  BitVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] % 2) out.set(i, true);
  return out;
}

/// Minimum total weight over all perfect matchings, by exhaustive recursion.
/// Missing edges are treated as unusable. Returns -1 when no perfect matching
/// exists.
inline std::int64_t brute_force_min_perfect_matching(
    int n, const std::vector<std::vector<std::int64_t>>& weight) {
  constexpr std::int64_t kNone = -1;
  std::vector<int> used(n, 0);
  std::function<std::int64_t()> rec = [&]() -> std::int64_t {
    int first = -1;
    for (int i = 0; i < n; ++i)
      if (!used[i]) {
        first = i;
        break;
      }
    if (first < 0) return 0;
    used[first] = 1;
    std::int64_t best = kNone;
    for (int j = first + 1; j < n; ++j) {
      if (used[j] || weight[first][j] < 0) continue;
      used[j] = 1;
      std::int64_t rest = rec();
      if (rest >= 0) {
        std::int64_t total = weight[first][j] + rest;
        if (best < 0 || total < best) best = total;
      }
      used[j] = 0;
    }
    used[first] = 0;
    return best;
  };
  return rec();
}

}  // namespace qecclab::testing
