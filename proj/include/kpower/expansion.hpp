#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpower/errors.hpp"
#include "kpower/rng.hpp"
#include "kpower/tuple_view.hpp"
#include "kpower/typicality.hpp"

namespace kpower {

struct ExpansionParams {
  std::size_t k = 2;
  double delta = 0.04;
  double kappa = 0.3;
  double alpha_density = 1.0;  // nominal alpha in x_k = n^k (alpha p)^{C(k,2)}
  double p = 0.5;

  void validate() const {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  }
  /// The paper-range condition 0 < delta < 1/(20k); outside it the
  /// thresholds still evaluate, the caller decides whether to warn.
  bool delta_in_range() const { return delta > 0.0 && delta < 1.0 / (20.0 * static_cast<double>(k)); }
};

/// x_k at a window from measured densities.
inline double x_measured(const TupleView& view, std::size_t window, std::size_t k) {
  return expected_clique_count(view, window, k);
}

/// x_k at a window with the nominal density alpha * p.
inline double x_nominal(const TupleView& view, std::size_t window, std::size_t k, double alpha, double p) {
  double x = 1.0;
  for (std::size_t i = window; i < window + k; ++i) x *= static_cast<double>(view.size(i));
  return x * std::pow(alpha * p, static_cast<double>(k * (k - 1) / 2));
}

namespace detail {

inline void check_step(const CliqueSet& start, const TupleView& view) {
  if (start.order() == 0) throw std::invalid_argument("clique set has order 0");
  if (start.window_start() + start.order() >= view.part_count())
    throw std::out_of_range("expansion window overflow");
}

// Successors of `start` one window ahead. pred (optional) receives, for each
// successor, the index in `start` of the first clique that reaches it.
inline CliqueSet expand_step_impl(const CliqueSet& start, const TupleView& view, std::vector<std::uint32_t>* pred) {
  check_step(start, view);
  const std::size_t i = start.window_start(), k = start.order(), last = i + k;
  if (pred) pred->clear();
  if (start.empty()) return CliqueSet(i + 1, k);

  // Group members by suffix (v_{i+1}, .., v_{i+k-1}); members of a group are
  // kept in set order.
  std::map<std::vector<Vertex>, std::vector<std::uint32_t>> groups;
  for (std::size_t r = 0; r < start.size(); ++r) {
    auto m = start.member(r);
    groups[std::vector<Vertex>(m.begin() + 1, m.end())].push_back(static_cast<std::uint32_t>(r));
  }

  std::vector<Vertex> flat;
  const auto& target = view.part(last);
  for (const auto& [suffix, members] : groups) {
    Bitset common(view.size(last), true);
    for (std::size_t d = 0; d < suffix.size(); ++d)
      common &= view.local_row(i + 1 + d, view.position(suffix[d]), last);
    if (common.none()) continue;
    Bitset reach(view.size(last));
    std::vector<std::uint32_t> who;
    if (pred) who.assign(view.size(last), 0);
    for (std::uint32_t r : members) {
      const Vertex head = start.member(r)[0];
      Bitset fresh = view.local_row(i, view.position(head), last) & common;
      if (pred) {
        Bitset add = fresh;
        add.subtract(reach);
        add.for_each([&](std::size_t b) { who[b] = r; });
      }
      reach |= fresh;
    }
    reach.for_each([&](std::size_t b) {
      flat.insert(flat.end(), suffix.begin(), suffix.end());
      flat.push_back(target[b]);
      if (pred) pred->push_back(who[b]);
    });
  }
  return CliqueSet::from_sorted_flat(i + 1, k, std::move(flat));
}

}  // namespace detail

/// All canonical K_k one window ahead that extend some member of `start` to
/// a canonical K_{k+1}.
inline CliqueSet expand_step(const CliqueSet& start, const TupleView& view) {
  return detail::expand_step_impl(start, view, nullptr);
}

struct ExpansionTrace {
  std::size_t start_window = 0;
  std::size_t start_size = 0;
  std::vector<std::size_t> windows;  // window index of each entry below
  std::vector<std::uint64_t> counts;
  std::vector<double> fractions;          // count / x_k (measured densities)
  std::vector<double> fractions_nominal;  // count / x_k (alpha p), when params given
  CliqueSet final_set;
};

/// Iterates expand_step from start.window_start() up to `to_window`.
inline ExpansionTrace expand_through(const CliqueSet& start, const TupleView& view, std::size_t to_window,
                                     const ExpansionParams* params = nullptr) {
  if (to_window < start.window_start()) throw std::invalid_argument("to_window precedes the start window");
  if (to_window + start.order() > view.part_count()) throw std::out_of_range("to_window out of range");
  ExpansionTrace tr;
  tr.start_window = start.window_start();
  tr.start_size = start.size();
  CliqueSet cur = start;
  while (cur.window_start() < to_window) {
    cur = expand_step(cur, view);
    const std::size_t w = cur.window_start();
    tr.windows.push_back(w);
    tr.counts.push_back(cur.size());
    const double xm = x_measured(view, w, cur.order());
    tr.fractions.push_back(xm > 0 ? static_cast<double>(cur.size()) / xm : 0.0);
    if (params) {
      const double xn = x_nominal(view, w, cur.order(), params->alpha_density, params->p);
      tr.fractions_nominal.push_back(xn > 0 ? static_cast<double>(cur.size()) / xn : 0.0);
    }
  }
  tr.final_set = std::move(cur);
  return tr;
}

/// Frontier layers with one back-pointer per reached clique, so a single
/// k-path can be rebuilt from any final clique.
struct TrackedExpansion {
  std::vector<CliqueSet> layers;                  // layers[0] is the start set
  std::vector<std::vector<std::uint32_t>> preds;  // preds[s][r]: index in layers[s] reaching layers[s+1][r]

  const CliqueSet& final_set() const { return layers.back(); }

  /// Vertex sequence of a canonical k-path from a start clique to
  /// final_set().member(r): the start clique followed by the newest vertex of
  /// every later layer.
  std::vector<Vertex> path_to(std::size_t r) const {
    std::vector<Vertex> tail;
    for (std::size_t s = layers.size() - 1; s > 0; --s) {
      tail.push_back(layers[s].member(r).back());
      r = preds[s - 1][r];
    }
    auto head = layers[0].member(r);
    std::vector<Vertex> out(head.begin(), head.end());
    out.insert(out.end(), tail.rbegin(), tail.rend());
    return out;
  }
};

inline TrackedExpansion expand_tracked(const CliqueSet& start, const TupleView& view, std::size_t to_window) {
  if (to_window < start.window_start()) throw std::invalid_argument("to_window precedes the start window");
  if (to_window + start.order() > view.part_count()) throw std::out_of_range("to_window out of range");
  TrackedExpansion te;
  te.layers.push_back(start);
  while (te.layers.back().window_start() < to_window) {
    std::vector<std::uint32_t> pred;
    CliqueSet next = detail::expand_step_impl(te.layers.back(), view, &pred);
    te.preds.push_back(std::move(pred));
    te.layers.push_back(std::move(next));
  }
  return te;
}

struct ExpanderResult {
  bool found = false;
  CanonicalClique clique;      // the returned K (best found when !found)
  CliqueSet reach;             // K's reach at the final window
  double reach_fraction = 0;   // |reach| / x_k at the final window
  double target_fraction = 0;  // 1 - 20 k delta
  std::size_t final_window = 0;
  std::size_t bisection_rounds = 0;
  bool used_fallback = false;
  bool ell_below_bound = false;    // ell < 3 k^2 log N
  bool start_below_delta = false;  // |start| < delta x_k at the start window
};

/// Searches `start` for a clique whose reach at window
/// start.window_start() + ell - k is at least (1 - 20 k delta) x_k. Halves are
/// the first ceil(|A|/2) members in set order and the rest; a half is kept
/// when its reach at the final window is at least (1/2 - 5 k delta) x_k, the
/// first half winning ties. If no half qualifies, or the final singleton
/// misses the target, every member is tried on its own in set order.
inline ExpanderResult find_expander(const CliqueSet& start, const TupleView& view, std::size_t ell,
                                    const ExpansionParams& params) {
  params.validate();
  const std::size_t k = start.order();
  if (k != params.k) throw std::invalid_argument("clique order differs from params.k");
  if (ell < 2 * k) throw std::invalid_argument("ell must be at least 2k");
  if (start.empty()) throw std::invalid_argument("find_expander needs a nonempty start set");
  const std::size_t final_window = start.window_start() + ell - k;
  if (final_window + k > view.part_count()) throw std::out_of_range("ell runs past the view");

  ExpanderResult res;
  res.final_window = final_window;
  const double x = x_measured(view, final_window, k);
  const double kd = static_cast<double>(k) * params.delta;
  res.target_fraction = 1.0 - 20.0 * kd;
  const double half_target = (0.5 - 5.0 * kd) * x;
  const double target = res.target_fraction * x;
  res.ell_below_bound = static_cast<double>(ell) < 3.0 * static_cast<double>(k * k) * std::log(static_cast<double>(view.graph().n()));
  res.start_below_delta = static_cast<double>(start.size()) < params.delta * x_measured(view, start.window_start(), k);

  auto reach_of = [&](const CliqueSet& s) { return expand_through(s, view, final_window).final_set; };
  auto finish = [&](std::size_t idx, const CliqueSet& src, CliqueSet reach) {
    res.clique = src.clique(idx);
    res.reach_fraction = x > 0 ? static_cast<double>(reach.size()) / x : 0.0;
    res.reach = std::move(reach);
  };

  CliqueSet a = start;
  bool stalled = false;
  while (a.size() > 1) {
    const std::size_t h = (a.size() + 1) / 2;
    CliqueSet s = a.slice(0, h), t = a.slice(h, a.size());
    ++res.bisection_rounds;
    if (static_cast<double>(reach_of(s).size()) >= half_target) {
      a = std::move(s);
    } else if (static_cast<double>(reach_of(t).size()) >= half_target) {
      a = std::move(t);
    } else {
      stalled = true;
      break;
    }
  }
  if (!stalled) {
    CliqueSet r = reach_of(a);
    if (static_cast<double>(r.size()) >= target) {
      res.found = true;
      finish(0, a, std::move(r));
      return res;
    }
  }

  res.used_fallback = true;
  std::size_t best_size = 0;
  bool have_best = false;
  for (std::size_t i = 0; i < start.size(); ++i) {
    CliqueSet r = reach_of(start.slice(i, i + 1));
    if (static_cast<double>(r.size()) >= target) {
      res.found = true;
      finish(i, start, std::move(r));
      return res;
    }
    if (!have_best || r.size() > best_size) {
      have_best = true;
      best_size = r.size();
      finish(i, start, std::move(r));
    }
  }
  return res;
}

/// Uniform random subset of m members (returned in set order).
inline CliqueSet random_subset(const CliqueSet& all, std::size_t m, std::uint64_t seed) {
  std::vector<std::uint32_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0U);
  Rng rng(seed);
  m = std::min(m, idx.size());
  rng.select_prefix(idx, m);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  std::vector<Vertex> flat;
  flat.reserve(m * all.order());
  for (auto r : idx) {
    auto mem = all.member(r);
    flat.insert(flat.end(), mem.begin(), mem.end());
  }
  return CliqueSet::from_sorted_flat(all.window_start(), all.order(), std::move(flat));
}

struct OneStepAudit {
  double measured = 0.0;  // |expand_step(start)| / |K_k(V_2..V_{k+1})|
  double bound = 0.0;     // kappa - 3 kappa delta - 6 delta
  std::size_t start_size = 0;
  std::size_t reached = 0;
  TypicalityReport gate;
};

/// One-step expansion on a (k+1)-tuple. The tuple must pass
/// check_super_typical under `gate`; otherwise Refused names the failing
/// condition. The bound uses params.delta.
inline OneStepAudit one_step_expansion_audit(const TupleView& view, double kappa, const ExpansionParams& params,
                                             const TypicalityParams& gate, std::uint64_t seed) {
  params.validate();
  const std::size_t k = params.k;
  if (view.part_count() != k + 1) throw std::invalid_argument("one_step_expansion_audit needs a (k+1)-tuple");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in [0, 1]");
  OneStepAudit out;
  out.gate = check_super_typical(view, gate);
  if (!out.gate.super_typical) throw Refused("tuple is not super-typical: " + out.gate.first_failure());

  const CliqueSet all = enumerate_canonical_cliques(view, 0, k);
  const auto m = static_cast<std::size_t>(std::ceil(kappa * static_cast<double>(all.size()) - 1e-9));
  const CliqueSet start = random_subset(all, m, derive_seed(seed, 0x6f6e65));
  const CliqueSet reached = expand_step(start, view);
  const std::uint64_t total = count_canonical_cliques(view, 1, k);
  out.start_size = start.size();
  out.reached = reached.size();
  out.measured = total ? static_cast<double>(reached.size()) / static_cast<double>(total) : 0.0;
  out.bound = kappa - 3.0 * kappa * params.delta - 6.0 * params.delta;
  return out;
}

struct MainExpansionAudit {
  std::size_t start_size = 0;
  double final_fraction = 0.0;  // |reach at window k| / x_k (measured)
  double bound = 0.0;           // 1 - 10 delta
  ExpansionTrace trace;
};

/// Random start of ceil(delta x_k) copies in the first window of a 2k-tuple,
/// expanded to the last window.
inline MainExpansionAudit main_expansion_audit(const TupleView& view, const ExpansionParams& params,
                                               std::uint64_t seed) {
  params.validate();
  const std::size_t k = params.k;
  if (view.part_count() < 2 * k) throw std::invalid_argument("main_expansion_audit needs at least 2k parts");
  const CliqueSet all = enumerate_canonical_cliques(view, 0, k);
  const auto m = static_cast<std::size_t>(std::ceil(params.delta * x_measured(view, 0, k) - 1e-9));
  MainExpansionAudit out;
  const CliqueSet start = random_subset(all, m, derive_seed(seed, 0x6d61696e));
  out.start_size = start.size();
  out.trace = expand_through(start, view, view.part_count() - k, &params);
  out.final_fraction = out.trace.fractions.empty() ? 0.0 : out.trace.fractions.back();
  out.bound = 1.0 - 10.0 * params.delta;
  return out;
}

struct HalvingAudit {
  bool applicable = false;  // A reaches >= (1 - 10 k delta) x_k
  double reach_fraction = 0.0;
  std::size_t partitions_tested = 0;
  std::size_t partitions_ok = 0;  // some half reaches >= (1/2 - 5 k delta) x_k
};

/// For `partitions` random equipartitions A = S u T (|S| = ceil(|A|/2)),
/// checks that S or T reaches (1/2 - 5 k delta) x_k at `to_window`.
inline HalvingAudit halving_audit(const CliqueSet& a, const TupleView& view, std::size_t to_window,
                                  const ExpansionParams& params, std::size_t partitions, std::uint64_t seed) {
  const std::size_t k = a.order();
  const double x = x_measured(view, to_window, k);
  const double kd = static_cast<double>(k) * params.delta;
  HalvingAudit out;
  const auto full = expand_through(a, view, to_window).final_set;
  out.reach_fraction = x > 0 ? static_cast<double>(full.size()) / x : 0.0;
  out.applicable = static_cast<double>(full.size()) >= (1.0 - 10.0 * kd) * x - 1e-9;
  if (!out.applicable) return out;
  for (std::size_t j = 0; j < partitions; ++j) {
    const CliqueSet s = random_subset(a, (a.size() + 1) / 2, derive_seed(seed, j));
    std::vector<Vertex> rest;
    for (std::size_t r = 0; r < a.size(); ++r)
      if (!s.contains(a.member(r))) rest.insert(rest.end(), a.member(r).begin(), a.member(r).end());
    const CliqueSet t = CliqueSet::from_sorted_flat(a.window_start(), k, std::move(rest));
    const double need = (0.5 - 5.0 * kd) * x - 1e-9;
    const bool ok = static_cast<double>(expand_through(s, view, to_window).final_set.size()) >= need ||
                    static_cast<double>(expand_through(t, view, to_window).final_set.size()) >= need;
    ++out.partitions_tested;
    if (ok) ++out.partitions_ok;
  }
  return out;
}

}  // namespace kpower
