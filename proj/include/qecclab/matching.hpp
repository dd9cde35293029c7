#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qecclab {

struct WeightedEdge {
  int u = 0, v = 0;
  std::int64_t weight = 0;
};

/// Pairing of all nodes with the total edge weight it costs.
struct Matching {
  std::vector<std::pair<int, int>> pairs;
  std::int64_t total_weight = 0;
};

namespace detail {

/// Maximum-weight matching on a general graph (primal-dual blossom method,
/// O(V^3)). Vertices are 1-based internally; absent edges carry weight 0 and
/// are never used, so callers must keep real edges strictly positive.
class BlossomMatcher {
 public:
  explicit BlossomMatcher(int n) : n_(n), cap_(2 * n + 1) {
    g_.assign(cap_ * cap_, Edge{});
    for (int u = 0; u < cap_; ++u)
      for (int v = 0; v < cap_; ++v) g_[idx(u, v)] = Edge{u, v, 0};
    lab_.assign(cap_, 0);
    match_.assign(cap_, 0);
    slack_.assign(cap_, 0);
    st_.assign(cap_, 0);
    pa_.assign(cap_, 0);
    state_.assign(cap_, -1);
    vis_.assign(cap_, 0);
    flower_.assign(cap_, {});
    flower_from_.assign(cap_ * cap_, 0);
  }

  void set_weight(int u, int v, std::int64_t w) {
    // 0-based external API.
    Edge& a = g_[idx(u + 1, v + 1)];
    Edge& b = g_[idx(v + 1, u + 1)];
    a.w = b.w = w;
  }

  /// Returns 0-based mate per vertex (-1 when unmatched).
  std::vector<int> solve() {
    std::fill(match_.begin(), match_.end(), 0);
    n_x_ = n_;
    std::int64_t w_max = 0;
    for (int u = 1; u <= n_; ++u) {
      st_[u] = u;
      flower_[u].clear();
      for (int v = 1; v <= n_; ++v) {
        flower_from_[idx(u, v)] = (u == v) ? u : 0;
        w_max = std::max(w_max, g_[idx(u, v)].w);
      }
    }
    st_[0] = 0;
    for (int u = n_ + 1; u < cap_; ++u) {
      st_[u] = 0;
      flower_[u].clear();
    }
    for (int u = 1; u <= n_; ++u) lab_[u] = w_max;
    while (grow()) {
    }
    std::vector<int> mate(n_, -1);
    for (int u = 1; u <= n_; ++u)
      if (match_[u]) mate[u - 1] = match_[u] - 1;
    return mate;
  }

 private:
  struct Edge {
    int u = 0, v = 0;
    std::int64_t w = 0;
  };

  std::size_t idx(int u, int v) const { return static_cast<std::size_t>(u) * cap_ + v; }

  std::int64_t e_delta(const Edge& e) const { return lab_[e.u] + lab_[e.v] - 2 * e.w; }

  void update_slack(int u, int x) {
    if (!slack_[x] || e_delta(g_[idx(u, x)]) < e_delta(g_[idx(slack_[x], x)])) slack_[x] = u;
  }

  void set_slack(int x) {
    slack_[x] = 0;
    for (int u = 1; u <= n_; ++u)
      if (g_[idx(u, x)].w > 0 && st_[u] != x && state_[st_[u]] == 0) update_slack(u, x);
  }

  void push_queue(int x) {
    if (x <= n_) {
      q_.push_back(x);
      return;
    }
    for (int sub : flower_[x]) push_queue(sub);
  }

  void set_st(int x, int b) {
    st_[x] = b;
    if (x <= n_) return;
    for (int sub : flower_[x]) set_st(sub, b);
  }

  int get_pr(int b, int xr) {
    auto& f = flower_[b];
    int pr = static_cast<int>(std::find(f.begin(), f.end(), xr) - f.begin());
    if (pr % 2 == 1) {
      std::reverse(f.begin() + 1, f.end());
      return static_cast<int>(f.size()) - pr;
    }
    return pr;
  }

  void set_match(int u, int v) {
    match_[u] = g_[idx(u, v)].v;
    if (u <= n_) return;
    Edge& e = g_[idx(u, v)];
    int xr = flower_from_[idx(u, e.u)];
    int pr = get_pr(u, xr);
    auto& f = flower_[u];
    for (int i = 0; i < pr; ++i) set_match(f[i], f[i ^ 1]);
    set_match(xr, v);
    std::rotate(f.begin(), f.begin() + pr, f.end());
  }

  void augment(int u, int v) {
    for (;;) {
      int xnv = st_[match_[u]];
      set_match(u, v);
      if (!xnv) return;
      set_match(xnv, st_[pa_[xnv]]);
      u = st_[pa_[xnv]];
      v = xnv;
    }
  }

  int get_lca(int u, int v) {
    for (++vis_t_; u || v; std::swap(u, v)) {
      if (u == 0) continue;
      if (vis_[u] == vis_t_) return u;
      vis_[u] = vis_t_;
      u = st_[match_[u]];
      if (u) u = st_[pa_[u]];
    }
    return 0;
  }

  void add_blossom(int u, int lca, int v) {
    int b = n_ + 1;
    while (b <= n_x_ && st_[b]) ++b;
    if (b > n_x_) ++n_x_;
    lab_[b] = 0;
    state_[b] = 0;
    match_[b] = match_[lca];
    flower_[b].clear();
    flower_[b].push_back(lca);
    for (int x = u, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      y = st_[match_[x]];
      flower_[b].push_back(y);
      push_queue(y);
    }
    std::reverse(flower_[b].begin() + 1, flower_[b].end());
    for (int x = v, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      y = st_[match_[x]];
      flower_[b].push_back(y);
      push_queue(y);
    }
    set_st(b, b);
    for (int x = 1; x <= n_x_; ++x) g_[idx(b, x)].w = g_[idx(x, b)].w = 0;
    for (int x = 1; x <= n_; ++x) flower_from_[idx(b, x)] = 0;
    for (int xs : flower_[b]) {
      for (int x = 1; x <= n_x_; ++x)
        if (g_[idx(b, x)].w == 0 || e_delta(g_[idx(xs, x)]) < e_delta(g_[idx(b, x)])) {
          g_[idx(b, x)] = g_[idx(xs, x)];
          g_[idx(x, b)] = g_[idx(x, xs)];
        }
      for (int x = 1; x <= n_; ++x)
        if (flower_from_[idx(xs, x)]) flower_from_[idx(b, x)] = xs;
    }
    set_slack(b);
  }

  void expand_blossom(int b) {
    for (int sub : flower_[b]) set_st(sub, sub);
    int xr = flower_from_[idx(b, g_[idx(b, pa_[b])].u)];
    int pr = get_pr(b, xr);
    for (int i = 0; i < pr; i += 2) {
      int xs = flower_[b][i];
      int xns = flower_[b][i + 1];
      pa_[xs] = g_[idx(xns, xs)].u;
      state_[xs] = 1;
      state_[xns] = 0;
      slack_[xs] = 0;
      set_slack(xns);
      push_queue(xns);
    }
    state_[xr] = 1;
    pa_[xr] = pa_[b];
    for (std::size_t i = pr + 1; i < flower_[b].size(); ++i) {
      int xs = flower_[b][i];
      state_[xs] = -1;
      set_slack(xs);
    }
    st_[b] = 0;
    flower_[b].clear();
  }

  bool on_found_edge(const Edge& e) {
    int u = st_[e.u], v = st_[e.v];
    if (state_[v] == -1) {
      pa_[v] = e.u;
      state_[v] = 1;
      int nu = st_[match_[v]];
      slack_[v] = slack_[nu] = 0;
      state_[nu] = 0;
      push_queue(nu);
    } else if (state_[v] == 0) {
      int lca = get_lca(u, v);
      if (!lca) {
        augment(u, v);
        augment(v, u);
        return true;
      }
      add_blossom(u, lca, v);
    }
    return false;
  }

  bool grow() {
    std::fill(state_.begin(), state_.begin() + n_x_ + 1, -1);
    std::fill(slack_.begin(), slack_.begin() + n_x_ + 1, 0);
    q_.clear();
    for (int x = 1; x <= n_x_; ++x)
      if (st_[x] == x && !match_[x]) {
        pa_[x] = 0;
        state_[x] = 0;
        push_queue(x);
      }
    if (q_.empty()) return false;
    for (;;) {
      while (!q_.empty()) {
        int u = q_.front();
        q_.pop_front();
        if (state_[st_[u]] == 1) continue;
        for (int v = 1; v <= n_; ++v)
          if (g_[idx(u, v)].w > 0 && st_[u] != st_[v]) {
            if (e_delta(g_[idx(u, v)]) == 0) {
              if (on_found_edge(g_[idx(u, v)])) return true;
            } else {
              update_slack(u, st_[v]);
            }
          }
      }
      std::int64_t d = std::numeric_limits<std::int64_t>::max();
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b && state_[b] == 1) d = std::min(d, lab_[b] / 2);
      for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && slack_[x]) {
          if (state_[x] == -1)
            d = std::min(d, e_delta(g_[idx(slack_[x], x)]));
          else if (state_[x] == 0)
            d = std::min(d, e_delta(g_[idx(slack_[x], x)]) / 2);
        }
      for (int u = 1; u <= n_; ++u) {
        if (state_[st_[u]] == 0) {
          if (lab_[u] <= d) return false;
          lab_[u] -= d;
        } else if (state_[st_[u]] == 1) {
          lab_[u] += d;
        }
      }
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b) {
          if (state_[b] == 0)
            lab_[b] += 2 * d;
          else if (state_[b] == 1)
            lab_[b] -= 2 * d;
        }
      q_.clear();
      for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && slack_[x] && st_[slack_[x]] != x &&
            e_delta(g_[idx(slack_[x], x)]) == 0)
          if (on_found_edge(g_[idx(slack_[x], x)])) return true;
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b && state_[b] == 1 && lab_[b] == 0) expand_blossom(b);
    }
  }

  int n_, cap_, n_x_ = 0;
  std::vector<Edge> g_;
  std::vector<std::int64_t> lab_;
  std::vector<int> match_, slack_, st_, pa_, state_, vis_;
  std::deque<int> q_;
  std::vector<std::vector<int>> flower_;
  std::vector<int> flower_from_;
  int vis_t_ = 0;
};

}  // namespace detail

/// Exact minimum-weight perfect matching. Weights must be nonnegative; the
/// node count must be even and every node must be matchable (the defect
/// graphs this decoder builds are complete, or complete plus boundary twins).
inline Matching min_weight_perfect_matching(int n_nodes, std::span<const WeightedEdge> edges) {
  Matching result;
  if (n_nodes == 0) return result;
  if (n_nodes < 0 || n_nodes % 2 != 0)
    throw std::invalid_argument("perfect matching needs an even node count");

  std::int64_t w_max = 1;
  for (const auto& e : edges) {
    if (e.weight < 0) throw std::invalid_argument("matching weights must be nonnegative");
    w_max = std::max(w_max, e.weight);
  }
  // Flip to a maximization problem in which every perfect matching beats
  // every smaller matching: transformed weights stay >= 1.
  const std::int64_t big = w_max * (n_nodes / 2) + 1;

  detail::BlossomMatcher matcher(n_nodes);
  std::vector<std::int64_t> raw(static_cast<std::size_t>(n_nodes) * n_nodes, -1);
  for (const auto& e : edges) {
    if (e.u == e.v) throw std::invalid_argument("matching: self loop");
    auto& slot = raw[static_cast<std::size_t>(e.u) * n_nodes + e.v];
    auto& slot2 = raw[static_cast<std::size_t>(e.v) * n_nodes + e.u];
    if (slot < 0 || e.weight < slot) slot = slot2 = e.weight;
  }
  for (int u = 0; u < n_nodes; ++u)
    for (int v = u + 1; v < n_nodes; ++v) {
      std::int64_t w = raw[static_cast<std::size_t>(u) * n_nodes + v];
      if (w >= 0) matcher.set_weight(u, v, big - w);
    }

  std::vector<int> mate = matcher.solve();
  for (int u = 0; u < n_nodes; ++u) {
    int v = mate[u];
    if (v < 0) throw std::invalid_argument("graph admits no perfect matching");
    if (u < v) {
      result.pairs.emplace_back(u, v);
      result.total_weight += raw[static_cast<std::size_t>(u) * n_nodes + v];
    }
  }
  return result;
}

}  // namespace qecclab
