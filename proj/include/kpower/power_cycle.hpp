#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kpower/errors.hpp"
#include "kpower/graph.hpp"
#include "kpower/regularity.hpp"

namespace kpower {

struct PowerCycle {
  std::vector<Vertex> vertices;  // cyclic order
  std::size_t k = 0;

  std::size_t length() const { return vertices.size(); }
};

struct CycleCheck {
  bool ok = false;
  std::optional<Edge> violation;  // first non-adjacent pair at cyclic distance <= k
  std::string reason;
};

/// Vertices distinct and every pair at cyclic distance 1..k adjacent.
/// Violations are reported scanning positions i ascending, then d = 1..k.
inline CycleCheck verify_power_cycle(const Graph& g, const PowerCycle& c) {
  CycleCheck out;
  const auto& vs = c.vertices;
  const std::size_t L = vs.size();
  if (L == 0) {
    out.reason = "empty sequence";
    return out;
  }
  Bitset seen(g.n());
  for (Vertex v : vs) {
    if (v >= g.n()) {
      out.reason = "vertex " + std::to_string(v) + " out of range";
      return out;
    }
    if (seen.test(v)) {
      out.reason = "vertex " + std::to_string(v) + " repeated";
      return out;
    }
    seen.set(v);
  }
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t d = 1; d <= c.k && d < L; ++d) {
      const Vertex u = vs[i], w = vs[(i + d) % L];
      if (!g.adjacent(u, w)) {
        out.violation = Edge{u, w};
        out.reason = "missing edge " + std::to_string(u) + "-" + std::to_string(w);
        return out;
      }
    }
  out.ok = true;
  return out;
}

namespace detail {

// Depth-first search for cyclic sequences in which every window of k+1
// consecutive vertices is a clique. `can_use` restricts the vertices tried;
// the first vertex is fixed by the caller. Returns true from `on_close` to stop.
template <class CanUse, class OnClose, class Prune>
void power_cycle_dfs(const std::vector<Bitset>& adj, std::size_t k, std::vector<std::uint32_t>& seq,
                     Bitset& used, CanUse&& can_use, OnClose&& on_close, Prune&& prune, bool& stop) {
  const std::size_t n = adj.size();
  const std::size_t len = seq.size();
  if (len >= k + 2) {
    bool closes = true;
    for (std::size_t a = 1; a <= k && closes; ++a)
      for (std::size_t b = 0; a + b <= k; ++b)
        if (!adj[seq[len - a]].test(seq[b])) {
          closes = false;
          break;
        }
    if (closes && on_close(seq)) {
      stop = true;
      return;
    }
  }
  if (prune(seq)) return;
  Bitset cand(n, true);
  cand.subtract(used);
  for (std::size_t a = 1; a <= k && a <= len; ++a) cand &= adj[seq[len - a]];
  cand.for_each([&](std::size_t v) {
    if (stop || !can_use(v)) return;
    seq.push_back(static_cast<std::uint32_t>(v));
    used.set(v);
    power_cycle_dfs(adj, k, seq, used, can_use, on_close, prune, stop);
    used.reset(v);
    seq.pop_back();
  });
}

inline std::vector<Bitset> rows_of(const Graph& g) {
  std::vector<Bitset> rows;
  for (Vertex v = 0; v < g.n(); ++v) rows.push_back(g.neighbors(v));
  return rows;
}

}  // namespace detail

/// Longest k-th power of a cycle in g by exhaustive branch and bound. The
/// first vertex of the returned sequence is its smallest id. Cycles need at
/// least k+2 vertices; if none exists the result is empty (length 0).
inline PowerCycle exact_longest_power_cycle(const Graph& g, std::size_t k, std::size_t cap = 12) {
  if (g.n() > cap)
    throw Refused("exact_longest_power_cycle: N = " + std::to_string(g.n()) + " exceeds cap " + std::to_string(cap));
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const std::size_t n = g.n();
  const auto adj = detail::rows_of(g);
  PowerCycle best;
  best.k = k;
  for (std::size_t first = 0; first < n; ++first) {
    if (n - first <= best.length()) break;
    std::vector<std::uint32_t> seq{static_cast<std::uint32_t>(first)};
    Bitset used(n);
    used.set(first);
    bool stop = false;
    detail::power_cycle_dfs(
        adj, k, seq, used, [&](std::size_t v) { return v > first; },
        [&](const std::vector<std::uint32_t>& s) {
          if (s.size() > best.length()) best.vertices.assign(s.begin(), s.end());
          return best.length() == n;
        },
        [&](const std::vector<std::uint32_t>& s) {
          // Every extension uses unused vertices above `first`.
          std::size_t avail = 0;
          for (std::size_t v = first + 1; v < n; ++v)
            if (!used.test(v)) ++avail;
          return s.size() + avail <= best.length();
        },
        stop);
    if (best.length() == n) break;
  }
  return best;
}

/// Cluster graph: node i stands for class i+1 of the partition.
struct ReducedGraph {
  Graph graph;
  std::vector<std::size_t> clusters;  // partition class index of each node

  std::size_t size() const { return graph.n(); }
};

/// Edge between two classes iff their pair is not refuted and has density >= d p.
inline ReducedGraph build_reduced(const RegularPartition& part, double d, double p) {
  const std::size_t t0 = part.k();
  if (t0 < 3) throw std::invalid_argument("build_reduced needs at least 3 classes");
  std::vector<Edge> edges;
  for (const auto& pi : part.pairs)
    if (pi.status != RegularityStatus::refuted && pi.density >= d * p - 1e-12)
      edges.emplace_back(static_cast<Vertex>(pi.i - 1), static_cast<Vertex>(pi.j - 1));
  ReducedGraph rg{Graph(t0, edges), {}};
  for (std::size_t i = 1; i <= t0; ++i) rg.clusters.push_back(i);
  return rg;
}

/// Cyclic order of all nodes with every k+1 consecutive nodes pairwise
/// adjacent, found by exhaustive backtracking from node 0.
inline std::optional<std::vector<std::size_t>> find_cluster_power_cycle(const ReducedGraph& rg, std::size_t k,
                                                                        std::size_t cap = 16) {
  const std::size_t t0 = rg.size();
  if (t0 > cap)
    throw Refused("find_cluster_power_cycle: " + std::to_string(t0) + " clusters exceed cap " + std::to_string(cap));
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (t0 == 0) return std::nullopt;
  const auto adj = detail::rows_of(rg.graph);
  if (t0 <= k + 1) {
    // The k-th power of a cycle this short is a clique.
    for (std::size_t u = 0; u < t0; ++u)
      if (adj[u].count() != t0 - 1) return std::nullopt;
    std::vector<std::size_t> order(t0);
    for (std::size_t i = 0; i < t0; ++i) order[i] = i;
    return order;
  }
  // A node of a k-th power of a cycle on >= 2k+1 nodes has degree >= 2k.
  if (t0 >= 2 * k + 1)
    for (std::size_t u = 0; u < t0; ++u)
      if (adj[u].count() < 2 * k) return std::nullopt;

  std::vector<std::uint32_t> seq{0};
  Bitset used(t0);
  used.set(0);
  std::optional<std::vector<std::size_t>> found;
  bool stop = false;
  detail::power_cycle_dfs(
      adj, k, seq, used, [](std::size_t) { return true; },
      [&](const std::vector<std::uint32_t>& s) {
        if (s.size() != t0) return false;
        found = std::vector<std::size_t>(s.begin(), s.end());
        return true;
      },
      [&](const std::vector<std::uint32_t>& s) {
        // Each unplaced node needs 2k neighbours among unplaced nodes and the
        // k nodes at either open end.
        if (s.size() < k) return false;
        Bitset room(t0, true);
        room.subtract(used);
        for (std::size_t a = 0; a < k; ++a) {
          room.set(s[a]);
          room.set(s[s.size() - 1 - a]);
        }
        bool dead = false;
        Bitset free_nodes(t0, true);
        free_nodes.subtract(used);
        const std::size_t need = std::min<std::size_t>(2 * k, t0 - 1);
        free_nodes.for_each([&](std::size_t u) {
          if (!dead && adj[u].intersect_count(room) < need) dead = true;
        });
        return dead;
      },
      stop);
  return found;
}

}  // namespace kpower
