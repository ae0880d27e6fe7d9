#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kpower/graph.hpp"
#include "kpower/rng.hpp"
#include "kpower/tuple_view.hpp"

namespace kpower {

struct ModelParams {
  std::size_t N = 0;
  double p = 0.5;
  std::size_t k = 2;
  double alpha = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  }
};

struct AdversaryReport {
  std::string strategy;
  std::uint64_t deleted_edges = 0;
  std::vector<std::size_t> per_vertex_deleted;
  std::size_t min_degree_after = 0;
  // Per-vertex cap r * d_G(v); empty when the strategy makes no budget claim.
  std::vector<std::size_t> budget;
  bool budget_claimed = false;
  std::vector<std::vector<Vertex>> planted_parts;

  bool budget_respected() const {
    if (budget.empty()) return true;
    for (std::size_t v = 0; v < per_vertex_deleted.size(); ++v)
      if (per_vertex_deleted[v] > budget[v]) return false;
    return true;
  }
};

struct Blowup {
  std::shared_ptr<const Graph> graph;
  TupleView view;
};

// Stream tags so that different generators never share a random stream.
namespace tags {
inline constexpr std::uint64_t kGnp = 0x676e70;
inline constexpr std::uint64_t kBlowup = 0x626c6f77;
inline constexpr std::uint64_t kPartite = 0x70617274;
inline constexpr std::uint64_t kRandomAdv = 0x72616e64;
}  // namespace tags

/// G(N, p). Pairs are visited as (u, v), u < v, in lexicographic order and
/// each consumes one uniform draw.
inline Graph gen_gnp(const ModelParams& params) {
  params.validate();
  const std::size_t n = params.N;
  std::vector<Bitset> rows(n, Bitset(n));
  Rng rng(derive_seed(params.seed, tags::kGnp));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(params.p)) {
        rows[u].set(v);
        rows[v].set(u);
      }
  return Graph::from_rows(std::move(rows));
}

/// G(H, n, p): part i is the id range [i*n, (i+1)*n).
inline Blowup gen_blowup(const Graph& pattern, std::size_t n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  const std::size_t t = pattern.n();
  const std::size_t total = t * n;
  std::vector<Bitset> rows(total, Bitset(total));
  Rng rng(derive_seed(seed, tags::kBlowup));
  for (auto [a, b] : pattern.edges())
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        if (rng.bernoulli(p)) {
          const std::size_t u = a * n + x, v = b * n + y;
          rows[u].set(v);
          rows[v].set(u);
        }
  std::vector<std::vector<Vertex>> parts(t);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t x = 0; x < n; ++x) parts[i].push_back(static_cast<Vertex>(i * n + x));
  auto g = std::make_shared<const Graph>(Graph::from_rows(std::move(rows)));
  return {g, TupleView(g, std::move(parts))};
}

/// Path pattern on t vertices with every pair at distance <= k joined
/// (the k-th power of a path); cyclic = true wraps it into the k-th power of C_t.
inline Graph power_pattern(std::size_t t, std::size_t k, bool cyclic) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t d = 1; d <= k; ++d) {
      if (i + d < t) {
        edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(i + d));
      } else if (cyclic && d < t) {
        const std::size_t j = (i + d) % t;
        if (j != i) edges.emplace_back(static_cast<Vertex>(std::min(i, j)), static_cast<Vertex>(std::max(i, j)));
      }
    }
  return Graph(t, edges);
}

/// Complete multipartite graph; part i takes the next sizes[i] ids.
inline Blowup complete_multipartite(const std::vector<std::size_t>& sizes) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::vector<Vertex>> parts;
  std::vector<std::size_t> part_of(n);
  Vertex next = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    parts.emplace_back();
    for (std::size_t a = 0; a < sizes[i]; ++a) {
      part_of[next] = i;
      parts.back().push_back(next++);
    }
  }
  std::vector<Bitset> rows(n, Bitset(n));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (part_of[u] != part_of[v]) rows[u].set(v);
  auto g = std::make_shared<const Graph>(Graph::from_rows(std::move(rows)));
  return {g, TupleView(g, std::move(parts))};
}

/// Part sizes of the extremal (k+1)-partite graph on N vertices: one part of
/// size floor(N/(k+1)) + 1, the remaining vertices split as evenly as
/// possible over k parts (larger parts first). Its largest part exceeds
/// floor(N/(k+1)), the independence number of C_N^k.
inline std::vector<std::size_t> extremal_part_sizes(std::size_t N, std::size_t k) {
  if (k + 1 > N) throw std::invalid_argument("extremal construction needs N >= k + 1");
  std::vector<std::size_t> sizes{N / (k + 1) + 1};
  const std::size_t rest = N - sizes[0];
  for (std::size_t i = 0; i < k; ++i) sizes.push_back(rest / k + (i < rest % k ? 1 : 0));
  return sizes;
}

inline Blowup extremal_graph(std::size_t N, std::size_t k) { return complete_multipartite(extremal_part_sizes(N, k)); }

namespace detail {

inline AdversaryReport diff_report(const Graph& before, const Graph& after, std::string strategy) {
  AdversaryReport rep;
  rep.strategy = std::move(strategy);
  rep.per_vertex_deleted.assign(before.n(), 0);
  for (Vertex v = 0; v < before.n(); ++v) rep.per_vertex_deleted[v] = before.degree(v) - after.degree(v);
  rep.deleted_edges = before.edge_count() - after.edge_count();
  rep.min_degree_after = after.n() ? min_degree(after) : 0;
  return rep;
}

}  // namespace detail

/// Splits V into k+1 parts, one of size round((1+skew) N/(k+1)) and k of
/// size floor((N - large)/k), the large part absorbing the remainder, and
/// deletes every edge inside a part. Vertices are assigned to parts by a
/// seeded shuffle; the large part is planted_parts[0].
inline std::pair<Graph, AdversaryReport> adversary_partite(const Graph& g, std::size_t k, double skew,
                                                           std::uint64_t seed) {
  const std::size_t n = g.n();
  if (k < 1 || k + 1 > n) throw std::invalid_argument("adversary_partite needs 1 <= k and k + 1 <= N");
  if (skew < 0.0) throw std::invalid_argument("skew must be non-negative");
  const double target = std::round((1.0 + skew) * static_cast<double>(n) / static_cast<double>(k + 1));
  if (target > static_cast<double>(n)) throw std::invalid_argument("skew makes the large part exceed N");
  const auto large0 = static_cast<std::size_t>(target);
  const std::size_t small = (n - large0) / k;
  if (small == 0) throw std::invalid_argument("skew leaves the small parts empty");
  const std::size_t large = n - k * small;

  std::vector<Vertex> order(n);
  std::iota(order.begin(), order.end(), Vertex{0});
  Rng rng(derive_seed(seed, tags::kPartite));
  rng.shuffle(order);

  std::vector<std::vector<Vertex>> parts(k + 1);
  std::vector<std::size_t> part_of(n);
  std::size_t pos = 0;
  for (std::size_t i = 0; i <= k; ++i) {
    const std::size_t sz = i == 0 ? large : small;
    for (std::size_t a = 0; a < sz; ++a) {
      part_of[order[pos]] = i;
      parts[i].push_back(order[pos++]);
    }
    std::sort(parts[i].begin(), parts[i].end());
  }

  std::vector<Bitset> rows;
  rows.reserve(n);
  for (Vertex v = 0; v < n; ++v) {
    Bitset row = g.neighbors(v);
    for (Vertex u : parts[part_of[v]]) row.reset(u);
    rows.push_back(std::move(row));
  }
  Graph out = Graph::from_rows(std::move(rows));
  auto rep = detail::diff_report(g, out, "partite");
  rep.planted_parts = std::move(parts);
  return {std::move(out), std::move(rep)};
}

/// For each victim in turn, deletes every edge with both ends in the
/// victim's current neighbourhood.
inline std::pair<Graph, AdversaryReport> adversary_triangle_killer(const Graph& g, const std::vector<Vertex>& victims) {
  std::vector<Bitset> rows;
  rows.reserve(g.n());
  for (Vertex v = 0; v < g.n(); ++v) rows.push_back(g.neighbors(v));
  for (Vertex victim : victims) {
    if (victim >= g.n()) throw std::out_of_range("victim out of range");
    const Bitset nb = rows[victim];
    nb.for_each([&](std::size_t u) { rows[u].subtract(nb); });
  }
  Graph out = Graph::from_rows(std::move(rows));
  return {out, detail::diff_report(g, out, "triangle-killer")};
}

/// Visits all edges in a seeded uniformly random order and deletes an edge
/// when both endpoints are still below their cap floor(r * d_G(v)).
inline std::pair<Graph, AdversaryReport> adversary_random(const Graph& g, double r, std::uint64_t seed) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("r must lie in [0, 1]");
  const std::size_t n = g.n();
  std::vector<std::size_t> cap(n), used(n, 0);
  for (Vertex v = 0; v < n; ++v)
    cap[v] = static_cast<std::size_t>(std::floor(r * static_cast<double>(g.degree(v)) + 1e-9));
  std::vector<Edge> edges = g.edges();
  Rng rng(derive_seed(seed, tags::kRandomAdv));
  rng.shuffle(edges);
  std::vector<Bitset> rows;
  rows.reserve(n);
  for (Vertex v = 0; v < n; ++v) rows.push_back(g.neighbors(v));
  for (auto [u, v] : edges) {
    if (used[u] < cap[u] && used[v] < cap[v]) {
      rows[u].reset(v);
      rows[v].reset(u);
      ++used[u];
      ++used[v];
    }
  }
  Graph out = Graph::from_rows(std::move(rows));
  auto rep = detail::diff_report(g, out, "random");
  rep.budget = std::move(cap);
  rep.budget_claimed = true;
  return {std::move(out), std::move(rep)};
}

}  // namespace kpower
