#pragma once

// Built-in invariant suites behind `qecc-lab selftest`: quick, deterministic
// re-checks of the core contracts on an installed binary.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "qecclab/matching.hpp"
#include "qecclab/mwpm.hpp"
#include "qecclab/qecct.hpp"
#include "qecclab/tensor.hpp"

namespace qecclab::selftest {

struct Check {
  std::string name;
  std::function<bool()> run;
};

inline bool gf2_linearity() {
  Rng rng(101);
  for (int trial = 0; trial < 10000; ++trial) {
    std::size_t rows = 1 + rng.below(12), cols = 1 + rng.below(70);
    BitMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (rng.bernoulli(0.3)) m.set(r, c, true);
    BitVector u(cols), v(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      if (rng.bernoulli(0.5)) u.set(c, true);
      if (rng.bernoulli(0.5)) v.set(c, true);
    }
    if (gf2_matvec(m, u ^ v) != (gf2_matvec(m, u) ^ gf2_matvec(m, v))) return false;
  }
  return true;
}

inline bool toric_structure() {
  for (int L : {2, 3, 4}) {
    StabilizerCode code = build_toric(L);
    if (code.n != 2u * L * L || code.n_s != 2u * L * L) return false;
    for (std::size_t r = 0; r < code.n_s; ++r)
      if (code.H.row_weight(r) != 4) return false;
    if (gf2_rank(code.sector_view(Sector::x).H) != static_cast<std::size_t>(L * L - 1)) return false;
    Rng rng(derive_seed(7, L));
    for (int trial = 0; trial < 1000; ++trial) {
      PauliError g(code.n);
      for (std::size_t row = 0; row < code.n_s; ++row)
        if (rng.bernoulli(0.5)) g ^= code.stabilizer_as_error(row);
      if (syndrome(code, g).any() || logical_projection(code, g).any()) return false;
    }
  }
  return true;
}

inline bool matching_exact() {
  Rng rng(303);
  for (int trial = 0; trial < 150; ++trial) {
    int n = 2 * static_cast<int>(1 + rng.below(4));
    std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, 0));
    std::vector<WeightedEdge> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) {
        w[u][v] = w[v][u] = static_cast<std::int64_t>(rng.below(40));
        edges.push_back({u, v, w[u][v]});
      }
    // exhaustive optimum
    std::vector<int> used(n, 0);
    std::function<std::int64_t()> best = [&]() -> std::int64_t {
      int first = -1;
      for (int i = 0; i < n; ++i)
        if (!used[i]) {
          first = i;
          break;
        }
      if (first < 0) return 0;
      used[first] = 1;
      std::int64_t out = -1;
      for (int j = first + 1; j < n; ++j) {
        if (used[j]) continue;
        used[j] = 1;
        std::int64_t rest = best();
        if (rest >= 0 && (out < 0 || w[first][j] + rest < out)) out = w[first][j] + rest;
        used[j] = 0;
      }
      used[first] = 0;
      return out;
    };
    if (min_weight_perfect_matching(n, edges).total_weight != best()) return false;
  }
  return true;
}

inline bool mwpm_validity() {
  StabilizerCode code = build_toric(4);
  Rng rng(404);
  for (int trial = 0; trial < 500; ++trial) {
    PauliError e = sample_depolarizing(code, 0.12, rng);
    if (syndrome(code, decode_mwpm(code, syndrome(code, e))) != syndrome(code, e)) return false;
  }
  return true;
}

inline bool softmax_and_xor() {
  Rng rng(505);
  BitMatrix mask(5, 5);
  for (std::size_t i = 0; i < 5; ++i) {
    mask.set(i, i, true);
    mask.set(i, (i + 2) % 5, true);
    mask.set((i + 2) % 5, i, true);
  }
  Tensor<double> x = Tensor<double>::zeros({2, 5, 5});
  for (auto& v : x.values()) v = rng.uniform(-2, 2);
  Tensor<double> p = masked_softmax(x, &mask);
  for (std::size_t row = 0; row < 10; ++row) {
    double sum = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      double pv = p.values()[row * 5 + j];
      if (!mask.get(row % 5, j) && pv != 0.0) return false;
      sum += pv;
    }
    if (std::abs(sum - 1.0) > 1e-9) return false;
  }

  BitMatrix rows(2, 4);
  rows.set(0, 0, true);
  rows.set(0, 3, true);
  rows.set(1, 1, true);
  for (std::uint64_t bits = 0; bits < 16; ++bits) {
    std::vector<double> xv(4);
    BitVector xb(4);
    for (std::size_t i = 0; i < 4; ++i) {
      xv[i] = (bits >> i) & 1;
      if (xv[i] > 0.5) xb.set(i, true);
    }
    Tensor<double> probe = Tensor<double>::from_values({1, 4}, xv);
    Tensor<double> out = xor_projection(probe, rows);
    BitVector expect = gf2_matvec(rows, xb);
    for (std::size_t r = 0; r < 2; ++r)
      if (out.values()[r] != (expect.get(r) ? 1.0 : 0.0)) return false;
  }
  return true;
}

inline bool schedule_endpoints() {
  CosineSchedule sched{5e-4, 5e-7, 1234};
  return sched.at(0) == 5e-4 && sched.at(1234) == 5e-7 && sched.at(300) > sched.at(900);
}

inline int run_all() {
  std::vector<Check> checks = {
      {"gf2 syndrome linearity", gf2_linearity},
      {"toric structure and stabilizer invisibility", toric_structure},
      {"blossom matching exactness (<= 8 nodes)", matching_exact},
      {"mwpm syndrome validity", mwpm_validity},
      {"masked softmax and differentiable xor", softmax_and_xor},
      {"cosine schedule endpoints", schedule_endpoints},
  };
  int failures = 0;
  for (const auto& check : checks) {
    bool ok = false;
    try {
      ok = check.run();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "selftest %s raised: %s\n", check.name.c_str(), e.what());
    }
    std::printf("[%s] %s\n", ok ? "ok" : "FAIL", check.name.c_str());
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace qecclab::selftest
