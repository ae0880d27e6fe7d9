#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpower/bitset.hpp"
#include "kpower/graph.hpp"

namespace kpower {

/// Exact pair density e(X, Y) / (|X| |Y|).
struct Density {
  std::uint64_t edges = 0;
  std::uint64_t pairs = 1;

  double value() const { return pairs == 0 ? 0.0 : static_cast<double>(edges) / static_cast<double>(pairs); }

  friend bool operator==(const Density& a, const Density& b) {
    return static_cast<unsigned __int128>(a.edges) * b.pairs ==
           static_cast<unsigned __int128>(b.edges) * a.pairs;
  }
  friend std::strong_ordering operator<=>(const Density& a, const Density& b) {
    return static_cast<unsigned __int128>(a.edges) * b.pairs <=>
           static_cast<unsigned __int128>(b.edges) * a.pairs;
  }
};

/// Ordered pairwise-disjoint parts (V_0, ..., V_{t-1}) of a shared graph.
/// Parts are stored as sorted id arrays; for every ordered pair of parts the
/// view precomputes, per vertex, its neighbourhood as a bitset over the
/// positions of the other part. Immutable after construction.
class TupleView {
 public:
  TupleView() = default;

  TupleView(std::shared_ptr<const Graph> graph, std::vector<std::vector<Vertex>> parts)
      : graph_(std::move(graph)), parts_(std::move(parts)) {
    if (!graph_) throw std::invalid_argument("TupleView: null graph");
    const std::size_t n = graph_->n();
    part_of_.assign(n, -1);
    pos_of_.assign(n, 0);
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      auto& part = parts_[i];
      if (part.empty()) throw std::invalid_argument("TupleView: empty part " + std::to_string(i));
      std::sort(part.begin(), part.end());
      for (std::size_t a = 0; a < part.size(); ++a) {
        const Vertex v = part[a];
        if (v >= n) throw std::out_of_range("TupleView: vertex out of range");
        if (part_of_[v] != -1) throw std::invalid_argument("TupleView: parts are not disjoint");
        part_of_[v] = static_cast<int>(i);
        pos_of_[v] = static_cast<std::uint32_t>(a);
      }
    }
    const std::size_t t = parts_.size();
    local_.assign(t * t, {});
    edges_.assign(t * t, 0);
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        if (i == j) continue;
        auto& rows = local_[i * t + j];
        rows.reserve(parts_[i].size());
        std::uint64_t e = 0;
        for (Vertex u : parts_[i]) {
          Bitset row(parts_[j].size());
          const Bitset& nb = graph_->neighbors(u);
          for (std::size_t b = 0; b < parts_[j].size(); ++b)
            if (nb.test(parts_[j][b])) row.set(b);
          e += row.count();
          rows.push_back(std::move(row));
        }
        edges_[i * t + j] = e;
      }
    }
  }

  const Graph& graph() const { return *graph_; }
  const std::shared_ptr<const Graph>& graph_ptr() const { return graph_; }
  std::size_t part_count() const { return parts_.size(); }
  const std::vector<Vertex>& part(std::size_t i) const { return parts_.at(i); }
  const std::vector<std::vector<Vertex>>& parts() const { return parts_; }
  std::size_t size(std::size_t i) const { return parts_.at(i).size(); }

  /// Part index of v, or -1.
  int part_of(Vertex v) const { return v < part_of_.size() ? part_of_[v] : -1; }
  std::uint32_t position(Vertex v) const { return pos_of_[v]; }

  /// Neighbours of the a-th vertex of part i inside part j, as positions of part j.
  const Bitset& local_row(std::size_t i, std::size_t a, std::size_t j) const {
    return local_[i * parts_.size() + j][a];
  }

  std::uint64_t edges_between(std::size_t i, std::size_t j) const {
    check_pair(i, j);
    return edges_[i * parts_.size() + j];
  }

  Density density(std::size_t i, std::size_t j) const {
    check_pair(i, j);
    return {edges_[i * parts_.size() + j],
            static_cast<std::uint64_t>(parts_[i].size()) * parts_[j].size()};
  }

 private:
  void check_pair(std::size_t i, std::size_t j) const {
    if (i >= parts_.size() || j >= parts_.size()) throw std::out_of_range("part index out of range");
    if (i == j) throw std::invalid_argument("density of a part with itself");
  }

  std::shared_ptr<const Graph> graph_;
  std::vector<std::vector<Vertex>> parts_;
  std::vector<int> part_of_;
  std::vector<std::uint32_t> pos_of_;
  std::vector<std::vector<Bitset>> local_;
  std::vector<std::uint64_t> edges_;
};

inline Density density(const TupleView& view, std::size_t i, std::size_t j) { return view.density(i, j); }

/// (v_i, ..., v_{i+k-1}) with v_j in part j, pairwise adjacent.
struct CanonicalClique {
  std::size_t window_start = 0;
  std::vector<Vertex> vertices;

  std::size_t order() const { return vertices.size(); }
  friend bool operator==(const CanonicalClique&, const CanonicalClique&) = default;
  friend auto operator<=>(const CanonicalClique&, const CanonicalClique&) = default;
};

/// Set of canonical copies of K_order sharing a window, stored flat and
/// sorted lexicographically.
class CliqueSet {
 public:
  CliqueSet() = default;
  CliqueSet(std::size_t window_start, std::size_t order) : window_start_(window_start), order_(order) {}

  /// Takes flat storage (size() multiple of order), sorts and removes duplicates.
  static CliqueSet from_flat(std::size_t window_start, std::size_t order, std::vector<Vertex> flat) {
    CliqueSet s(window_start, order);
    if (order == 0 || flat.size() % order != 0) throw std::invalid_argument("CliqueSet: bad flat storage");
    const std::size_t m = flat.size() / order;
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    auto key = [&](std::size_t a) { return std::span<const Vertex>(flat.data() + a * order, order); };
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      auto x = key(a), y = key(b);
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
    });
    s.flat_.reserve(flat.size());
    for (std::size_t r = 0; r < m; ++r) {
      auto cur = key(idx[r]);
      if (r > 0) {
        auto prev = key(idx[r - 1]);
        if (std::equal(cur.begin(), cur.end(), prev.begin())) continue;
      }
      s.flat_.insert(s.flat_.end(), cur.begin(), cur.end());
    }
    return s;
  }

  /// Flat storage already sorted and duplicate free (not re-checked).
  static CliqueSet from_sorted_flat(std::size_t window_start, std::size_t order, std::vector<Vertex> flat) {
    CliqueSet s(window_start, order);
    s.flat_ = std::move(flat);
    return s;
  }

  static CliqueSet from_cliques(std::size_t window_start, std::size_t order,
                                const std::vector<CanonicalClique>& cliques) {
    std::vector<Vertex> flat;
    flat.reserve(cliques.size() * order);
    for (const auto& c : cliques) {
      if (c.window_start != window_start || c.order() != order)
        throw std::invalid_argument("CliqueSet: member window mismatch");
      flat.insert(flat.end(), c.vertices.begin(), c.vertices.end());
    }
    return from_flat(window_start, order, std::move(flat));
  }

  std::size_t window_start() const { return window_start_; }
  std::size_t order() const { return order_; }
  std::size_t size() const { return order_ == 0 ? 0 : flat_.size() / order_; }
  bool empty() const { return flat_.empty(); }
  const std::vector<Vertex>& flat() const { return flat_; }

  std::span<const Vertex> member(std::size_t r) const {
    return {flat_.data() + r * order_, order_};
  }
  CanonicalClique clique(std::size_t r) const {
    auto m = member(r);
    return {window_start_, {m.begin(), m.end()}};
  }

  /// Index of `vertices` in the set, or size() if absent.
  std::size_t find(std::span<const Vertex> vertices) const {
    std::size_t lo = 0, hi = size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      auto m = member(mid);
      if (std::lexicographical_compare(m.begin(), m.end(), vertices.begin(), vertices.end()))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo < size()) {
      auto m = member(lo);
      if (std::equal(m.begin(), m.end(), vertices.begin(), vertices.end())) return lo;
    }
    return size();
  }
  bool contains(std::span<const Vertex> vertices) const { return find(vertices) < size(); }

  /// Members [first, last) as a new set.
  CliqueSet slice(std::size_t first, std::size_t last) const {
    return from_sorted_flat(window_start_, order_,
                            {flat_.begin() + static_cast<std::ptrdiff_t>(first * order_),
                             flat_.begin() + static_cast<std::ptrdiff_t>(last * order_)});
  }

  bool is_subset_of(const CliqueSet& o) const {
    for (std::size_t r = 0; r < size(); ++r)
      if (!o.contains(member(r))) return false;
    return true;
  }

  friend bool operator==(const CliqueSet&, const CliqueSet&) = default;

 private:
  std::size_t window_start_ = 0;
  std::size_t order_ = 0;
  std::vector<Vertex> flat_;
};

namespace detail {

inline void check_window(const TupleView& view, std::size_t start, std::size_t order) {
  if (order == 0) throw std::invalid_argument("clique order must be positive");
  if (start + order > view.part_count()) throw std::out_of_range("clique window out of range");
}

// Depth-first enumeration over the window; cand[d] holds the candidates for
// part start+d as positions, refined front-to-back by local rows.
template <class Emit>
void enumerate_window(const TupleView& view, std::size_t start, std::size_t order, Emit&& emit) {
  std::vector<std::vector<Bitset>> cand(order + 1);
  cand[0].reserve(order);
  for (std::size_t d = 0; d < order; ++d) cand[0].emplace_back(view.size(start + d), true);
  std::vector<std::uint32_t> chosen(order);

  auto rec = [&](auto&& self, std::size_t depth) -> void {
    const Bitset& mine = cand[depth][depth];
    if (depth + 1 == order) {
      emit(chosen, depth, mine);
      return;
    }
    mine.for_each([&](std::size_t a) {
      chosen[depth] = static_cast<std::uint32_t>(a);
      auto& next = cand[depth + 1];
      next = cand[depth];
      bool alive = true;
      for (std::size_t d = depth + 1; d < order; ++d) {
        next[d] &= view.local_row(start + depth, a, start + d);
        if (next[d].none()) {
          alive = false;
          break;
        }
      }
      if (alive) self(self, depth + 1);
    });
  };
  rec(rec, 0);
}

}  // namespace detail

/// All canonical copies of K_order in parts start..start+order-1.
inline CliqueSet enumerate_canonical_cliques(const TupleView& view, std::size_t start, std::size_t order) {
  detail::check_window(view, start, order);
  std::vector<Vertex> flat;
  detail::enumerate_window(view, start, order,
                           [&](const std::vector<std::uint32_t>& chosen, std::size_t last, const Bitset& tail) {
                             tail.for_each([&](std::size_t a) {
                               for (std::size_t d = 0; d < last; ++d)
                                 flat.push_back(view.part(start + d)[chosen[d]]);
                               flat.push_back(view.part(start + last)[a]);
                             });
                           });
  // Positions are visited in ascending order and parts are sorted, so the
  // output is already lexicographic.
  return CliqueSet::from_sorted_flat(start, order, std::move(flat));
}

/// |K_order(V_start, ..., V_{start+order-1})| without materializing copies.
inline std::uint64_t count_canonical_cliques(const TupleView& view, std::size_t start, std::size_t order) {
  detail::check_window(view, start, order);
  std::uint64_t total = 0;
  detail::enumerate_window(view, start, order,
                           [&](const std::vector<std::uint32_t>&, std::size_t, const Bitset& tail) {
                             total += tail.count();
                           });
  return total;
}

/// ∏ |V_i| · ∏ d(V_i, V_j) over the window, using measured densities.
inline double expected_clique_count(const TupleView& view, std::size_t start, std::size_t order) {
  detail::check_window(view, start, order);
  double x = 1.0;
  for (std::size_t i = start; i < start + order; ++i) {
    x *= static_cast<double>(view.size(i));
    for (std::size_t j = i + 1; j < start + order; ++j) x *= view.density(i, j).value();
  }
  return x;
}

/// Parts sidecar: one line per part, space separated vertex ids.
inline void write_parts(std::ostream& os, const std::vector<std::vector<Vertex>>& parts) {
  for (const auto& part : parts) {
    for (std::size_t a = 0; a < part.size(); ++a) os << (a ? " " : "") << part[a];
    os << '\n';
  }
}

inline std::vector<std::vector<Vertex>> read_parts(std::istream& is) {
  std::vector<std::vector<Vertex>> parts;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<Vertex> part;
    std::uint64_t v = 0;
    while (ls >> v) part.push_back(static_cast<Vertex>(v));
    if (!ls.eof()) throw std::runtime_error("parts: malformed line '" + line + "'");
    parts.push_back(std::move(part));
  }
  return parts;
}

}  // namespace kpower
