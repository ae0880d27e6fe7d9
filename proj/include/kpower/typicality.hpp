#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpower/regularity.hpp"
#include "kpower/tuple_view.hpp"

namespace kpower {

struct TypicalityParams {
  double epsilon = 0.2;
  double delta = 0.2;
  double p = 0.5;
  std::size_t sample_trials = 200;
  double subset_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  }
};

/// x in the closed window (1 +- w) * expect.
inline bool in_window(double x, double expect, double w) {
  return x >= (1.0 - w) * expect - 1e-9 && x <= (1.0 + w) * expect + 1e-9;
}

/// Global ids of the vertices of part `to` adjacent to all of `seeds`.
inline std::vector<Vertex> common_part_neighborhood(const TupleView& view, std::span<const Vertex> seeds,
                                                    std::size_t to) {
  Bitset acc(view.size(to), true);
  for (Vertex s : seeds) {
    const int i = view.part_of(s);
    if (i < 0) throw std::invalid_argument("seed vertex not in the view");
    if (static_cast<std::size_t>(i) == to) throw std::invalid_argument("seed vertex lies in the target part");
    acc &= view.local_row(static_cast<std::size_t>(i), view.position(s), to);
  }
  std::vector<Vertex> out;
  out.reserve(acc.count());
  acc.for_each([&](std::size_t b) { out.push_back(view.part(to)[b]); });
  return out;
}

namespace detail {

inline std::uint64_t stream_for(std::uint64_t seed, std::span<const Vertex> vs, std::size_t a, std::size_t b) {
  std::uint64_t s = derive_seed(seed, {a, b});
  for (Vertex v : vs) s = derive_seed(s, v);
  return s;
}

// Regular pair of density (1 +- w) * expect_density, with regularity
// certified as "not refuted by the sampled check at (w, p)".
inline bool neighborhood_pair_ok(const Graph& g, const std::vector<Vertex>& x, const std::vector<Vertex>& y,
                                 double expect_density, double w, const TypicalityParams& params,
                                 std::uint64_t stream) {
  if (x.empty() || y.empty()) return expect_density <= 0.0;
  const auto v = check_regular_sampled(g, x, y, w, params.p, params.sample_trials, params.subset_fraction, stream);
  return !v.refuted() && in_window(v.pair_density, expect_density, w);
}

}  // namespace detail

/// Per-part sets of epsilon-typical vertices: |N(v, V_j)| within
/// (1 +- eps) d(V_i, V_j) |V_j| for all j != i, and every pair of those
/// neighbourhoods not refuted at (eps, p) with density (1 +- eps) d(V_j, V_l).
/// d(., .) is the measured density (the p factor included).
struct TypicalVertices {
  std::vector<std::vector<Vertex>> sets;
  std::vector<double> fractions;
};

inline bool is_typical_vertex(const TupleView& view, Vertex v, const TypicalityParams& params) {
  const int ii = view.part_of(v);
  if (ii < 0) throw std::invalid_argument("vertex not in the view");
  const auto i = static_cast<std::size_t>(ii);
  const std::size_t t = view.part_count();
  const Vertex seed_arr[1] = {v};
  std::vector<std::vector<Vertex>> nb(t);
  for (std::size_t j = 0; j < t; ++j) {
    if (j == i) continue;
    nb[j] = common_part_neighborhood(view, seed_arr, j);
    const double expect = view.density(i, j).value() * static_cast<double>(view.size(j));
    if (!in_window(static_cast<double>(nb[j].size()), expect, params.epsilon)) return false;
  }
  for (std::size_t j = 0; j < t; ++j)
    for (std::size_t l = j + 1; l < t; ++l) {
      if (j == i || l == i) continue;
      if (!detail::neighborhood_pair_ok(view.graph(), nb[j], nb[l], view.density(j, l).value(), params.epsilon, params,
                                        detail::stream_for(params.seed, seed_arr, j, l)))
        return false;
    }
  return true;
}

inline TypicalVertices typical_vertices(const TupleView& view, const TypicalityParams& params) {
  params.validate();
  if (view.part_count() < 3) throw std::invalid_argument("typical_vertices needs at least 3 parts");
  TypicalVertices out;
  for (std::size_t i = 0; i < view.part_count(); ++i) {
    out.sets.emplace_back();
    for (Vertex v : view.part(i))
      if (is_typical_vertex(view, v, params)) out.sets.back().push_back(v);
    out.fractions.push_back(static_cast<double>(out.sets.back().size()) / static_cast<double>(view.size(i)));
  }
  return out;
}

/// A canonical copy (any order, parts disjoint from a and b) is typical with
/// respect to parts a and b under window w when its common neighbourhoods
/// N_a, N_b have sizes (1 +- w) n_x prod d(V_c, V_x) and span a pair not
/// refuted at (w, p) with density (1 +- w) d(V_a, V_b).
inline bool is_typical_clique_wrt(const TupleView& view, std::span<const Vertex> copy, std::size_t a, std::size_t b,
                                  double w, const TypicalityParams& params) {
  std::vector<Vertex> n_a = common_part_neighborhood(view, copy, a);
  std::vector<Vertex> n_b = common_part_neighborhood(view, copy, b);
  for (std::size_t x : {a, b}) {
    double expect = static_cast<double>(view.size(x));
    for (Vertex c : copy) expect *= view.density(static_cast<std::size_t>(view.part_of(c)), x).value();
    const auto got = static_cast<double>(x == a ? n_a.size() : n_b.size());
    if (!in_window(got, expect, w)) return false;
  }
  return detail::neighborhood_pair_ok(view.graph(), n_a, n_b, view.density(a, b).value(), w, params,
                                      detail::stream_for(params.seed, copy, a, b));
}

/// delta-typical copy of K_{t-2} in (V_1..V_{t-2}) with respect to the last
/// two parts. `copy` holds global ids, one per part 0..t-3.
inline bool is_typical_clique(const CanonicalClique& copy, const TupleView& view, const TypicalityParams& params) {
  const std::size_t t = view.part_count();
  if (t < 3) throw std::invalid_argument("is_typical_clique needs at least 3 parts");
  if (copy.window_start != 0 || copy.order() != t - 2)
    throw std::invalid_argument("copy must live in the first t-2 parts");
  for (std::size_t i = 0; i < copy.order(); ++i)
    if (view.part_of(copy.vertices[i]) != static_cast<int>(i)) throw std::invalid_argument("copy vertex in wrong part");
  return is_typical_clique_wrt(view, copy.vertices, t - 2, t - 1, params.delta, params);
}

struct TypicalityReport {
  std::vector<std::vector<Vertex>> typical_vertices;
  std::vector<double> typical_fraction;
  bool pairs_unrefuted = false;
  bool tuple_typical = false;  // epsilon-typical tuple

  // Window counts: middle K_{t-2} in (V_2..V_{t-1}), left K_{t-1} in
  // (V_1..V_{t-1}), right K_{t-1} in (V_2..V_t). For t = 3 the middle count
  // is |V_2|.
  std::uint64_t middle_count = 0, left_count = 0, right_count = 0;
  double middle_expected = 0, left_expected = 0, right_expected = 0;
  std::uint64_t typical_clique_count = 0;

  bool cond_i = false, cond_ii = false, cond_iii = false;
  bool super_typical = false;

  // Name of the first failing condition, or empty.
  std::string first_failure() const {
    if (!tuple_typical) return "epsilon-typical tuple";
    if (!cond_i) return "(i) K_{t-2} count";
    if (!cond_ii) return "(ii) K_{t-1} counts";
    if (!cond_iii) return "(iii) typical K_{t-2} copies";
    return {};
  }
};

/// Evaluates every super-typicality condition. Expected counts use measured
/// densities. Regularity sub-checks are sampled with params.sample_trials.
inline TypicalityReport check_super_typical(const TupleView& view, const TypicalityParams& params) {
  params.validate();
  const std::size_t t = view.part_count();
  if (t < 3) throw std::invalid_argument("check_super_typical needs at least 3 parts");
  TypicalityReport rep;

  auto tv = typical_vertices(view, params);
  rep.typical_vertices = std::move(tv.sets);
  rep.typical_fraction = std::move(tv.fractions);
  rep.pairs_unrefuted = true;
  for (std::size_t i = 0; i < t && rep.pairs_unrefuted; ++i)
    for (std::size_t j = i + 1; j < t; ++j) {
      auto v = check_regular_sampled(view.graph(), view.part(i), view.part(j), params.epsilon, params.p,
                                     params.sample_trials, params.subset_fraction,
                                     derive_seed(params.seed, {0x7475706c, i, j}));
      if (v.refuted()) {
        rep.pairs_unrefuted = false;
        break;
      }
    }
  rep.tuple_typical = rep.pairs_unrefuted;
  for (double f : rep.typical_fraction)
    if (f < 1.0 - params.epsilon - 1e-12) rep.tuple_typical = false;

  rep.middle_count = count_canonical_cliques(view, 1, t - 2);
  rep.middle_expected = expected_clique_count(view, 1, t - 2);
  rep.left_count = count_canonical_cliques(view, 0, t - 1);
  rep.left_expected = expected_clique_count(view, 0, t - 1);
  rep.right_count = count_canonical_cliques(view, 1, t - 1);
  rep.right_expected = expected_clique_count(view, 1, t - 1);
  rep.cond_i = in_window(static_cast<double>(rep.middle_count), rep.middle_expected, params.delta);
  rep.cond_ii = in_window(static_cast<double>(rep.left_count), rep.left_expected, params.delta) &&
                in_window(static_cast<double>(rep.right_count), rep.right_expected, params.delta);

  const CliqueSet middle = enumerate_canonical_cliques(view, 1, t - 2);
  for (std::size_t r = 0; r < middle.size(); ++r)
    if (is_typical_clique_wrt(view, middle.member(r), 0, t - 1, params.delta, params)) ++rep.typical_clique_count;
  rep.cond_iii = static_cast<double>(rep.typical_clique_count) >= (1.0 - params.delta) * rep.middle_expected - 1e-9;

  rep.super_typical = rep.tuple_typical && rep.cond_i && rep.cond_ii && rep.cond_iii;
  return rep;
}

/// Canonical K_t count in parts 0..t-1 against (1 + eps) prod |S_i| p^{C(t,2)}.
inline bool clique_count_upper_check(const TupleView& view, std::size_t t, double eps, double p) {
  const std::uint64_t count = count_canonical_cliques(view, 0, t);
  double bound = 1.0 + eps;
  for (std::size_t i = 0; i < t; ++i) bound *= static_cast<double>(view.size(i));
  bound *= std::pow(p, static_cast<double>(t * (t - 1) / 2));
  return static_cast<double>(count) <= bound + 1e-9;
}

}  // namespace kpower
