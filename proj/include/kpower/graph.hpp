#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kpower/bitset.hpp"

namespace kpower {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

/// Immutable simple undirected graph on vertices 0..n-1 with one adjacency
/// bitset per vertex.
class Graph {
 public:
  Graph() = default;

  /// Builds from an edge list. Self loops are rejected; duplicate edges collapse.
  Graph(std::size_t n, const std::vector<Edge>& edges) : rows_(n, Bitset(n)), degree_(n, 0) {
    for (auto [u, v] : edges) {
      if (u >= n || v >= n) throw std::out_of_range("edge endpoint out of range");
      if (u == v) throw std::invalid_argument("self loop");
      rows_[u].set(v);
      rows_[v].set(u);
    }
    finish();
  }

  /// Builds from adjacency rows; the relation is symmetrized check-free, so the
  /// caller must pass a symmetric irreflexive relation.
  static Graph from_rows(std::vector<Bitset> rows) {
    Graph g;
    g.rows_ = std::move(rows);
    g.degree_.assign(g.rows_.size(), 0);
    g.finish();
    return g;
  }

  static Graph complete(std::size_t n) {
    std::vector<Bitset> rows(n, Bitset(n, true));
    for (std::size_t v = 0; v < n; ++v) rows[v].reset(v);
    return from_rows(std::move(rows));
  }

  static Graph empty(std::size_t n) { return from_rows(std::vector<Bitset>(n, Bitset(n))); }

  std::size_t n() const { return rows_.size(); }
  std::uint64_t edge_count() const { return edges_; }

  bool adjacent(Vertex u, Vertex v) const { return rows_[u].test(v); }
  const Bitset& neighbors(Vertex v) const { return rows_[v]; }
  std::size_t degree(Vertex v) const { return degree_[v]; }

  /// Edges (u, v) with u < v in lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edges_);
    for (Vertex u = 0; u < n(); ++u)
      rows_[u].for_each([&](std::size_t v) {
        if (v > u) out.emplace_back(u, static_cast<Vertex>(v));
      });
    return out;
  }

  /// Copy with the given edges removed (absent edges are ignored).
  Graph without_edges(const std::vector<Edge>& removed) const {
    std::vector<Bitset> rows = rows_;
    for (auto [u, v] : removed) {
      rows[u].reset(v);
      rows[v].reset(u);
    }
    return from_rows(std::move(rows));
  }

  bool is_subgraph_of(const Graph& host) const {
    if (host.n() != n()) return false;
    for (Vertex v = 0; v < n(); ++v)
      if (!rows_[v].is_subset_of(host.rows_[v])) return false;
    return true;
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.rows_ == b.rows_; }

 private:
  void finish() {
    std::uint64_t sum = 0;
    for (std::size_t v = 0; v < rows_.size(); ++v) {
      if (rows_[v].size() != rows_.size()) throw std::invalid_argument("adjacency row has wrong size");
      if (rows_[v].test(v)) throw std::invalid_argument("self loop");
      degree_[v] = rows_[v].count();
      sum += degree_[v];
    }
    edges_ = sum / 2;
  }

  std::vector<Bitset> rows_;
  std::vector<std::size_t> degree_;
  std::uint64_t edges_ = 0;
};

inline std::size_t min_degree(const Graph& g) {
  if (g.n() == 0) throw std::invalid_argument("min_degree of empty vertex set");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (Vertex v = 0; v < g.n(); ++v) best = std::min(best, g.degree(v));
  return best;
}

/// Vertices of `target` adjacent to every vertex of `seeds`, in target order.
/// An empty seed set returns `target` unchanged.
inline std::vector<Vertex> common_neighborhood(const Graph& g, const std::vector<Vertex>& seeds,
                                               const std::vector<Vertex>& target) {
  if (seeds.empty()) return target;
  Bitset common = g.neighbors(seeds.front());
  for (std::size_t i = 1; i < seeds.size(); ++i) common &= g.neighbors(seeds[i]);
  std::vector<Vertex> out;
  for (Vertex y : target)
    if (common.test(y)) out.push_back(y);
  return out;
}

/// e(X, Y) for disjoint X, Y.
inline std::uint64_t edges_between(const Graph& g, const std::vector<Vertex>& xs,
                                   const std::vector<Vertex>& ys) {
  Bitset mask(g.n());
  for (Vertex y : ys) mask.set(y);
  std::uint64_t e = 0;
  for (Vertex x : xs) e += g.neighbors(x).intersect_count(mask);
  return e;
}

// Text format:
//   n m
//   u v        (m lines, 0-based, u < v, lexicographic)
inline void write_graph(std::ostream& os, const Graph& g) {
  os << g.n() << ' ' << g.edge_count() << '\n';
  for (auto [u, v] : g.edges()) os << u << ' ' << v << '\n';
}

inline Graph read_graph(std::istream& is) {
  std::size_t n = 0;
  std::uint64_t m = 0;
  if (!(is >> n >> m)) throw std::runtime_error("graph: missing 'n m' header");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    std::uint64_t u = 0, v = 0;
    if (!(is >> u >> v)) throw std::runtime_error("graph: expected " + std::to_string(m) + " edges");
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
  }
  return Graph(n, edges);
}

inline std::string to_text(const Graph& g) {
  std::ostringstream os;
  write_graph(os, g);
  return os.str();
}

}  // namespace kpower
