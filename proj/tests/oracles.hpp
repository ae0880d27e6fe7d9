#pragma once

// Independent brute-force references. Nothing here calls the library's
// enumeration, expansion or regularity code; only Graph adjacency is used.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <set>
#include <vector>

#include "kpower/graph.hpp"
#include "kpower/rng.hpp"

namespace oracle {

using kpower::Graph;
using kpower::Vertex;
using Tuple = std::vector<Vertex>;

// Every tuple (v_s, ..., v_{s+order-1}) with v_i in parts[i], pairwise
// adjacent, by plain nested iteration. Sorted.
inline std::vector<Tuple> canonical_cliques(const Graph& g, const std::vector<std::vector<Vertex>>& parts,
                                            std::size_t start, std::size_t order) {
  std::vector<Tuple> out;
  std::vector<std::size_t> idx(order, 0);
  if (order == 0) return out;
  while (true) {
    Tuple t(order);
    for (std::size_t i = 0; i < order; ++i) t[i] = parts[start + i][idx[i]];
    bool ok = true;
    for (std::size_t a = 0; a < order && ok; ++a)
      for (std::size_t b = a + 1; b < order && ok; ++b) ok = g.adjacent(t[a], t[b]);
    if (ok) out.push_back(t);
    std::size_t i = order;
    while (i > 0) {
      --i;
      if (++idx[i] < parts[start + i].size()) break;
      idx[i] = 0;
      if (i == 0) {
        std::sort(out.begin(), out.end());
        return out;
      }
    }
  }
}

// Projection definition of one expansion step: all K_{k+1} copies in the
// window starting at `start` whose first k vertices form a start clique,
// projected onto their last k vertices.
inline std::vector<Tuple> expand_step(const Graph& g, const std::vector<std::vector<Vertex>>& parts,
                                      std::size_t start, const std::vector<Tuple>& from) {
  const std::size_t k = from.empty() ? 0 : from.front().size();
  std::set<Tuple> seed(from.begin(), from.end()), reached;
  if (k == 0) return {};
  for (const auto& c : canonical_cliques(g, parts, start, k + 1)) {
    Tuple head(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k));
    if (seed.count(head)) reached.insert(Tuple(c.begin() + 1, c.end()));
  }
  return {reached.begin(), reached.end()};
}

// Largest |d(A,B) - d(V1,V2)| over all A, B with |A| >= ceil(eps|V1|),
// |B| >= ceil(eps|V2|). Both sides are enumerated; keep sizes tiny.
struct Deviation {
  double value = 0.0;
  Tuple a, b;
};

inline Deviation max_deviation(const Graph& g, const Tuple& v1, const Tuple& v2, double eps) {
  auto density = [&](const Tuple& a, const Tuple& b) {
    std::size_t e = 0;
    for (auto x : a)
      for (auto y : b) e += g.adjacent(x, y);
    return static_cast<double>(e) / static_cast<double>(a.size() * b.size());
  };
  const double d = density(v1, v2);
  const auto m1 = static_cast<std::size_t>(std::ceil(eps * static_cast<double>(v1.size()) - 1e-9));
  const auto m2 = static_cast<std::size_t>(std::ceil(eps * static_cast<double>(v2.size()) - 1e-9));
  Deviation best;
  for (std::uint32_t ma = 1; ma < (1u << v1.size()); ++ma) {
    if (static_cast<std::size_t>(__builtin_popcount(ma)) < std::max<std::size_t>(m1, 1)) continue;
    Tuple a;
    for (std::size_t i = 0; i < v1.size(); ++i)
      if (ma >> i & 1) a.push_back(v1[i]);
    for (std::uint32_t mb = 1; mb < (1u << v2.size()); ++mb) {
      if (static_cast<std::size_t>(__builtin_popcount(mb)) < std::max<std::size_t>(m2, 1)) continue;
      Tuple b;
      for (std::size_t i = 0; i < v2.size(); ++i)
        if (mb >> i & 1) b.push_back(v2[i]);
      const double dev = std::abs(density(a, b) - d);
      if (dev > best.value + 1e-12) best = {dev, a, b};
    }
  }
  return best;
}

// Longest sequence, over all orderings of all subsets, in which every pair
// at cyclic distance <= k is adjacent. Length >= k+2 only; 0 if none.
inline std::size_t longest_power_cycle(const Graph& g, std::size_t k) {
  const std::size_t n = g.n();
  std::size_t best = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const auto L = static_cast<std::size_t>(__builtin_popcount(mask));
    if (L < k + 2 || L <= best) continue;
    Tuple vs;
    for (Vertex v = 0; v < n; ++v)
      if (mask >> v & 1) vs.push_back(v);
    // fix the first vertex, permute the rest
    do {
      bool ok = true;
      for (std::size_t i = 0; i < L && ok; ++i)
        for (std::size_t d = 1; d <= k && ok; ++d) ok = g.adjacent(vs[i], vs[(i + d) % L]);
      if (ok) {
        best = L;
        break;
      }
    } while (std::next_permutation(vs.begin() + 1, vs.end()));
  }
  return best;
}

// Random t-partite graph: parts of the given sizes over consecutive ids,
// each cross pair (also within parts if `inside`) present with probability p.
struct Instance {
  std::shared_ptr<const Graph> graph;
  std::vector<std::vector<Vertex>> parts;
};

inline Instance random_multipartite(std::uint64_t seed, const std::vector<std::size_t>& sizes, double p,
                                    bool inside = false) {
  kpower::Rng rng(seed);
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<int> part(n);
  Instance inst;
  Vertex next = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    inst.parts.emplace_back();
    for (std::size_t a = 0; a < sizes[i]; ++a) {
      part[next] = static_cast<int>(i);
      inst.parts.back().push_back(next++);
    }
  }
  std::vector<kpower::Edge> edges;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      if ((inside || part[u] != part[v]) && rng.bernoulli(p)) edges.emplace_back(u, v);
  inst.graph = std::make_shared<const Graph>(n, edges);
  return inst;
}

// Triangles through v by scanning every pair of vertices.
inline std::size_t triangles_at(const Graph& g, Vertex v) {
  std::size_t c = 0;
  for (Vertex a = 0; a < g.n(); ++a)
    for (Vertex b = a + 1; b < g.n(); ++b)
      c += a != v && b != v && g.adjacent(v, a) && g.adjacent(v, b) && g.adjacent(a, b);
  return c;
}

}  // namespace oracle
