#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "qecclab/codes.hpp"
#include "qecclab/matching.hpp"
#include "qecclab/noise.hpp"

namespace qecclab {

/// Defect graph fed to the matcher: one node per syndrome defect (lattice
/// position and, for repeated measurements, the round index), plus virtual
/// boundary nodes for open-boundary codes.
struct DefectNode {
  GridCoord at;
  int time = 0;
  bool boundary = false;
};

struct DefectGraph {
  std::vector<DefectNode> nodes;
  std::vector<WeightedEdge> edges;
};

inline Matching min_weight_perfect_matching(const DefectGraph& g) {
  return min_weight_perfect_matching(static_cast<int>(g.nodes.size()), g.edges);
}

namespace detail {

inline int lattice_distance(const StabilizerCode& code, GridCoord a, GridCoord b) {
  int e = code.grid_extent;
  int di = std::abs(a.i - b.i);
  int dj = std::abs(a.j - b.j);
  if (code.periodic) {
    di = std::min(di, e - di);
    dj = std::min(dj, e - dj);
  }
  return (di + dj) / 2;
}

inline int travel_direction(int from, int to, int extent, bool periodic) {
  if (!periodic) return to > from ? 1 : -1;
  int fwd = ((to - from) % extent + extent) % extent;
  return fwd <= extent - fwd ? 1 : -1;  // ties walk in +direction
}

/// Dense grid position -> qubit id lookup.
inline std::vector<int> grid_lookup(const StabilizerCode& code) {
  std::vector<int> lut(static_cast<std::size_t>(code.grid_extent) * code.grid_extent, -1);
  for (std::size_t q = 0; q < code.n; ++q)
    lut[static_cast<std::size_t>(code.qubit_at[q].i) * code.grid_extent + code.qubit_at[q].j] =
        static_cast<int>(q);
  return lut;
}

/// Visit the qubits crossed on the canonical shortest path between two
/// same-type checks: first along axis i (shorter wrap direction on the
/// torus), then along axis j.
template <class F>
void walk_between(const StabilizerCode& code, GridCoord a, GridCoord b, F&& flip) {
  const int e = code.grid_extent;
  auto norm = [&](int v) { return code.periodic ? ((v % e) + e) % e : v; };
  int i = a.i, j = a.j;
  if (i != b.i) {
    int dir = travel_direction(i, b.i, e, code.periodic);
    while (i != b.i) {
      flip(norm(i + dir), j);
      i = norm(i + 2 * dir);
    }
  }
  if (j != b.j) {
    int dir = travel_direction(j, b.j, e, code.periodic);
    while (j != b.j) {
      flip(i, norm(j + dir));
      j = norm(j + 2 * dir);
    }
  }
}

/// Star-check chains terminate on the top/bottom boundary, plaquette chains
/// on the left/right one.
inline int boundary_distance(const StabilizerCode& code, CheckType t, GridCoord c) {
  int g = code.grid_extent;
  if (t == CheckType::x_check) return std::min((c.i + 1) / 2, (g - c.i) / 2);
  return std::min((c.j + 1) / 2, (g - c.j) / 2);
}

template <class F>
void walk_to_boundary(const StabilizerCode& code, CheckType t, GridCoord c, F&& flip) {
  int g = code.grid_extent;
  if (t == CheckType::x_check) {
    bool near_top = (c.i + 1) / 2 <= (g - c.i) / 2;
    int dir = near_top ? -1 : 1;
    int steps = near_top ? (c.i + 1) / 2 : (g - c.i) / 2;
    for (int k = 0, i = c.i; k < steps; ++k, i += 2 * dir) flip(i + dir, c.j);
  } else {
    bool near_left = (c.j + 1) / 2 <= (g - c.j) / 2;
    int dir = near_left ? -1 : 1;
    int steps = near_left ? (c.j + 1) / 2 : (g - c.j) / 2;
    for (int k = 0, j = c.j; k < steps; ++k, j += 2 * dir) flip(c.i, j + dir);
  }
}

struct SpaceTimeDefect {
  GridCoord at;
  int time = 1;  // measurement round, 1-based
};

/// Match one check type's defects and XOR the implied data correction into
/// `flips` (indexed by qubit id). Static decoding passes every defect with
/// time = 1 and time_rounds = 0 so no temporal structure exists.
inline void match_and_correct(const StabilizerCode& code, CheckType type,
                              const std::vector<SpaceTimeDefect>& defects, int time_rounds,
                              BitVector& flips) {
  if (defects.empty()) return;
  const int m = static_cast<int>(defects.size());

  DefectGraph graph;
  graph.nodes.reserve(2 * m + 1);
  for (const auto& d : defects) graph.nodes.push_back({d.at, d.time, false});
  for (int u = 0; u < m; ++u)
    for (int v = u + 1; v < m; ++v)
      graph.edges.push_back(
          {u, v,
           lattice_distance(code, defects[u].at, defects[v].at) +
               std::abs(defects[u].time - defects[v].time)});

  if (!code.periodic) {
    // One boundary twin per defect; twins pair up among themselves for free.
    for (int u = 0; u < m; ++u) {
      graph.nodes.push_back({defects[u].at, defects[u].time, true});
      graph.edges.push_back({u, m + u, boundary_distance(code, type, defects[u].at)});
    }
    for (int u = 0; u < m; ++u)
      for (int v = u + 1; v < m; ++v) graph.edges.push_back({m + u, m + v, 0});
  } else if (m % 2 == 1) {
    // Only measurement noise in the final rounds can leave odd parity; a
    // single virtual node absorbs one defect as a pure time-like chain.
    if (time_rounds == 0) throw std::invalid_argument("decode_mwpm: syndrome has odd defect parity");
    graph.nodes.push_back({GridCoord{}, time_rounds, true});
    for (int u = 0; u < m; ++u)
      graph.edges.push_back({u, m, time_rounds - defects[u].time});
  }

  auto lut = grid_lookup(code);
  auto flip_at = [&](int i, int j) {
    int q = lut[static_cast<std::size_t>(i) * code.grid_extent + j];
    flips.flip(static_cast<std::size_t>(q));
  };

  Matching matching = min_weight_perfect_matching(graph);
  for (auto [u, v] : matching.pairs) {
    bool u_real = u < m, v_real = v < m;
    if (u_real && v_real) {
      walk_between(code, defects[u].at, defects[v].at, flip_at);
    } else if (u_real != v_real) {
      const auto& d = defects[u_real ? u : v];
      if (!code.periodic && graph.nodes[u_real ? v : u].boundary && (u_real ? v : u) < 2 * m)
        walk_to_boundary(code, type, d.at, flip_at);
      // time-boundary matches carry no data correction
    }
  }
}

inline void require_lattice(const StabilizerCode& code) {
  if (code.family == CodeFamily::custom)
    throw std::invalid_argument("mwpm decoding needs a lattice code (toric or surface)");
}

}  // namespace detail

/// Minimum-weight perfect matching decoder for perfect syndrome measurement.
/// X and Z sectors are matched independently; edge weights are lattice graph
/// distances (wraparound Manhattan on the torus, with virtual boundary nodes
/// on the planar code). The returned correction always reproduces the input
/// syndrome.
inline PauliError decode_mwpm(const StabilizerCode& code, const BitVector& s) {
  detail::require_lattice(code);
  if (s.size() != code.n_s) throw std::invalid_argument("decode_mwpm: syndrome length mismatch");
  PauliError out(code.n);
  for (CheckType type : {CheckType::z_check, CheckType::x_check}) {
    std::vector<detail::SpaceTimeDefect> defects;
    for (std::size_t r = 0; r < code.n_s; ++r)
      if (code.check_type[r] == type && s.get(r)) defects.push_back({code.check_at[r], 1});
    BitVector flips(code.n);
    detail::match_and_correct(code, type, defects, 0, flips);
    // plaquette (z_check) defects witness X components and vice versa
    if (type == CheckType::z_check)
      out.x ^= flips;
    else
      out.z ^= flips;
  }
  return out;
}

/// Space-time matching for repeated faulty measurements: defects are rounds
/// where a check's outcome changed (round 0 reads as all-zero), edges cost
/// spatial distance plus the round difference, and matched space-like
/// segments yield the data correction. With q = 0 this degenerates to static
/// matching of the final syndrome.
inline PauliError decode_mwpm_spacetime(const StabilizerCode& code, const SyndromeRun& run) {
  detail::require_lattice(code);
  if (run.T < 1) throw std::invalid_argument("decode_mwpm_spacetime: empty run");
  for (const auto& s : run.syndromes)
    if (s.size() != code.n_s)
      throw std::invalid_argument("decode_mwpm_spacetime: syndrome length mismatch");

  PauliError out(code.n);
  for (CheckType type : {CheckType::z_check, CheckType::x_check}) {
    std::vector<detail::SpaceTimeDefect> defects;
    for (int t = 0; t < run.T; ++t) {
      for (std::size_t r = 0; r < code.n_s; ++r) {
        if (code.check_type[r] != type) continue;
        bool prev = t > 0 && run.syndromes[t - 1].get(r);
        if (run.syndromes[t].get(r) != prev) defects.push_back({code.check_at[r], t + 1});
      }
    }
    BitVector flips(code.n);
    detail::match_and_correct(code, type, defects, run.T, flips);
    if (type == CheckType::z_check)
      out.x ^= flips;
    else
      out.z ^= flips;
  }
  return out;
}

}  // namespace qecclab
