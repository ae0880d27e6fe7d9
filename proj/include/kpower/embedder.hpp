#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpower/expansion.hpp"
#include "kpower/power_cycle.hpp"
#include "kpower/regularity.hpp"
#include "kpower/rng.hpp"
#include "kpower/tuple_view.hpp"

namespace kpower {

struct EmbedParams {
  std::size_t k = 2;
  double d = 0.5;
  double p = 0.5;
  double xi = 0.05;
  double delta = 0.02;
  double epsilon = 0.15;
  std::size_t retries = 5;
  std::uint64_t seed = 0;
};

struct EmbedFailure {
  std::string stage;  // setup, anchor, step, close, seam, verify, length
  std::size_t step = 0;
  std::size_t window = 0;
  std::size_t attempts = 0;
  double reach_fraction = 0.0;
  std::vector<std::size_t> set_sizes;
  std::string message;
};

struct EmbedResult {
  bool success = false;
  PowerCycle cycle;
  std::optional<EmbedFailure> failure;
  std::size_t t = 0;        // windows
  std::size_t t0 = 0;       // clusters
  std::size_t r = 0;        // chunks per cluster
  std::size_t n_prime = 0;  // window size
  std::size_t n_tilde = 0;  // size of every S_i, T_i, S'_i
  std::size_t s_cap = 0;    // final step
  std::size_t steps_done = 0;
  std::size_t redraws = 0;
  std::size_t fallbacks = 0;  // find_expander calls that needed the per-clique fallback
  double anchor_forward = 0.0, anchor_backward = 0.0, close_reach = 0.0;
};

namespace detail {

enum : std::uint8_t { kFree = 0, kReserve = 1, kPath = 2, kTarget = 3, kNextTarget = 4, kCloser = 5, kOutside = 6 };

class EmbedRun {
 public:
  EmbedRun(std::shared_ptr<const Graph> g, std::vector<std::vector<Vertex>> windows, const EmbedParams& prm)
      : g_(std::move(g)), win_(std::move(windows)), prm_(prm), rng_(derive_seed(prm.seed, 0x656d6264)) {
    status_.assign(g_->n(), kOutside);
    for (auto& w : win_)
      for (Vertex v : w) status_[v] = kFree;
    t_ = win_.size();
  }

  std::vector<Vertex> draw(std::size_t w, std::size_t m, std::uint8_t code) {
    std::vector<Vertex> pool;
    for (Vertex v : win_[w])
      if (status_[v] == kFree) pool.push_back(v);
    if (pool.size() < m) return {};
    rng_.select_prefix(pool, m);
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    for (Vertex v : pool) status_[v] = code;
    return pool;
  }

  std::optional<std::vector<std::vector<Vertex>>> draw_all(std::size_t m, std::uint8_t code) {
    std::vector<std::vector<Vertex>> out;
    for (std::size_t w = 0; w < t_; ++w) {
      auto s = draw(w, m, code);
      if (s.size() != m) {
        for (auto& x : out) release(x, code);
        return std::nullopt;
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  void release(const std::vector<Vertex>& vs, std::uint8_t code) {
    for (Vertex v : vs)
      if (status_[v] == code) status_[v] = kFree;
  }
  void retag(const std::vector<Vertex>& vs, std::uint8_t from, std::uint8_t to) {
    for (Vertex v : vs)
      if (status_[v] == from) status_[v] = to;
  }
  void mark_path(const std::vector<Vertex>& vs) {
    for (Vertex v : vs) status_[v] = kPath;
  }

  TupleView view(const std::vector<std::vector<Vertex>>& parts) const { return TupleView(g_, parts); }

  std::size_t count_in(std::size_t w, std::uint8_t code) const {
    std::size_t c = 0;
    for (Vertex v : win_[w])
      if (status_[v] == code) ++c;
    return c;
  }

  std::size_t t() const { return t_; }
  const Graph& graph() const { return *g_; }
  int window_of(Vertex v) const {
    for (std::size_t w = 0; w < t_; ++w)
      if (std::binary_search(win_[w].begin(), win_[w].end(), v)) return static_cast<int>(w);
    return -1;
  }

 private:
  std::shared_ptr<const Graph> g_;
  std::vector<std::vector<Vertex>> win_;
  EmbedParams prm_;
  Rng rng_;
  std::vector<std::uint8_t> status_;
  std::size_t t_ = 0;
};

inline CliqueSet rebase(const CliqueSet& s, std::size_t window) {
  return CliqueSet::from_sorted_flat(window, s.order(), s.flat());
}

inline std::vector<Vertex> reversed(std::span<const Vertex> xs) { return {xs.rbegin(), xs.rend()}; }

}  // namespace detail

/// Window layout: window j*t0 + i is chunk j of the cluster at position i of
/// the cluster cycle. `cycle` lists reduced-graph nodes; node c is base class
/// c + 1, and chunk classes point to it through chunked.parent.
inline std::vector<std::vector<Vertex>> layout_windows(const RegularPartition& chunked,
                                                       const std::vector<std::size_t>& cycle) {
  std::vector<std::vector<std::size_t>> chunks_of(cycle.size());
  std::size_t r = SIZE_MAX;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    for (std::size_t c = 1; c < chunked.classes.size(); ++c)
      if (chunked.parent.at(c) == cycle[i] + 1) chunks_of[i].push_back(c);
    r = std::min(r, chunks_of[i].size());
  }
  if (cycle.empty() || r == 0) throw std::invalid_argument("layout_windows: some cluster has no chunks");
  std::vector<std::vector<Vertex>> windows;
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < cycle.size(); ++i) windows.push_back(chunked.classes[chunks_of[i][j]]);
  return windows;
}

/// Builds an almost spanning k-th power of a cycle window by window. See the
/// README for the stage-by-stage description; every returned cycle has
/// passed verify_power_cycle.
inline EmbedResult embed_power_cycle(std::shared_ptr<const Graph> graph, const RegularPartition& chunked,
                                     const std::vector<std::size_t>& cycle, const EmbedParams& prm) {
  const std::size_t k = prm.k;
  EmbedResult res;
  auto windows = layout_windows(chunked, cycle);
  res.t0 = cycle.size();
  res.t = windows.size();
  res.r = res.t / res.t0;
  res.n_prime = chunked.class_size;
  res.n_tilde = static_cast<std::size_t>(std::floor(prm.xi * static_cast<double>(res.n_prime) + 1e-9));
  const std::size_t t = res.t, nt = res.n_tilde, np = res.n_prime;
  if (k < 2) throw std::invalid_argument("embed_power_cycle needs k >= 2");
  if (nt < k) throw std::invalid_argument("xi * n' must be at least k");
  if (t < 2 * k) throw std::invalid_argument("embed_power_cycle needs at least 2k windows");

  const auto s_paper = static_cast<std::size_t>(std::floor((1.0 - 2.0 * prm.xi) * static_cast<double>(np) + 1e-9));
  const std::size_t s_room = np + 1 >= 3 * nt ? np + 1 - 3 * nt : 0;
  res.s_cap = std::min(s_paper, s_room);
  auto fail = [&](std::string stage, std::size_t step, std::string msg) {
    EmbedFailure f;
    f.stage = std::move(stage);
    f.step = step;
    f.message = std::move(msg);
    res.failure = std::move(f);
    return res;
  };
  if (res.s_cap < 1) return fail("setup", 0, "windows too small for the reserve and target sets");

  ExpansionParams ep;
  ep.k = k;
  ep.delta = prm.delta;
  ep.p = prm.p;
  ep.alpha_density = prm.d;
  const double target = 1.0 - 20.0 * static_cast<double>(k) * prm.delta;

  detail::EmbedRun run(graph, windows, prm);
  auto reach_ok = [&](const CliqueSet& reach, const TupleView& view, std::size_t w, double* frac) {
    const double x = x_measured(view, w, k);
    *frac = x > 0 ? static_cast<double>(reach.size()) / x : 0.0;
    return *frac >= target - 1e-12;
  };

  // Anchor: S, T^1 and K* with good forward and backward reach.
  std::vector<std::vector<Vertex>> S, T;
  TrackedExpansion forward, backward;
  CanonicalClique anchor;
  bool anchored = false;
  for (std::size_t attempt = 0; attempt <= prm.retries && !anchored; ++attempt) {
    if (attempt > 0) {
      ++res.redraws;
      for (auto& x : S) run.release(x, detail::kReserve);
      for (auto& x : T) run.release(x, detail::kTarget);
    }
    auto s_sets = run.draw_all(nt, detail::kReserve);
    auto t_sets = s_sets ? run.draw_all(nt, detail::kTarget) : std::nullopt;
    if (!s_sets || !t_sets) return fail("anchor", 1, "not enough free vertices for S and T^1");
    S = std::move(*s_sets);
    T = std::move(*t_sets);
    const TupleView fwd = run.view(T);
    std::vector<std::vector<Vertex>> bparts;
    for (std::size_t i = k; i-- > 0;) bparts.push_back(T[i]);
    for (std::size_t i = t; i-- > 0;) bparts.push_back(S[i]);
    const TupleView bwd = run.view(bparts);
    const CliqueSet cands = enumerate_canonical_cliques(fwd, 0, k);
    double best_f = 0, best_b = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const CliqueSet one = cands.slice(c, c + 1);
      TrackedExpansion f = expand_tracked(one, fwd, t - k);
      double ff = 0, bf = 0;
      const bool fok = reach_ok(f.final_set(), fwd, t - k, &ff);
      best_f = std::max(best_f, ff);
      if (!fok) continue;
      const auto rev = detail::reversed(one.member(0));
      const CliqueSet bone = CliqueSet::from_sorted_flat(0, k, rev);
      TrackedExpansion b = expand_tracked(bone, bwd, t);
      const bool bok = reach_ok(b.final_set(), bwd, t, &bf);
      best_b = std::max(best_b, bf);
      if (!bok) continue;
      anchor = one.clique(0);
      forward = std::move(f);
      backward = std::move(b);
      res.anchor_forward = ff;
      res.anchor_backward = bf;
      anchored = true;
      break;
    }
    if (!anchored && attempt == prm.retries) {
      fail("anchor", 1, "no clique in (T_1..T_k) expands well both ways");
      res.failure->attempts = attempt + 1;
      res.failure->reach_fraction = std::max(best_f, best_b);
      res.failure->set_sizes = {nt, cands.size()};
      return res;
    }
  }

  // Induction: path grows by t vertices per step.
  std::vector<Vertex> path;
  TrackedExpansion prev = std::move(forward);  // paths from the last fixed clique to K^s
  CliqueSet ks = prev.final_set();
  auto commit_segment = [&](const TrackedExpansion& te, std::span<const Vertex> end_clique) {
    const std::size_t idx = te.final_set().find(end_clique);
    auto seg = te.path_to(idx);
    std::vector<Vertex> fresh;
    if (path.empty())
      fresh = seg;
    else
      fresh.assign(seg.begin() + static_cast<std::ptrdiff_t>(k), seg.end());
    run.mark_path(fresh);
    path.insert(path.end(), fresh.begin(), fresh.end());
  };
  auto audit = [&](std::size_t s) {
    for (std::size_t w = 0; w < t; ++w) {
      if (run.count_in(w, detail::kPath) != s - 1 || run.count_in(w, detail::kReserve) != nt ||
          run.count_in(w, detail::kTarget) != nt)
        throw std::logic_error("embedder: disjointness invariant broken at step " + std::to_string(s) + ", window " +
                               std::to_string(w));
    }
  };

  for (std::size_t s = 1; s < res.s_cap; ++s) {
    audit(s);
    bool stepped = false;
    double last_frac = 0;
    for (std::size_t attempt = 0; attempt <= prm.retries && !stepped; ++attempt) {
      if (attempt > 0) ++res.redraws;
      auto next = run.draw_all(nt, detail::kNextTarget);
      if (!next) return fail("step", s, "not enough free vertices for T^{s+1}");
      std::vector<std::vector<Vertex>> parts(T.end() - static_cast<std::ptrdiff_t>(k), T.end());
      parts.insert(parts.end(), next->begin(), next->end());
      const TupleView view = run.view(parts);
      const CliqueSet start = detail::rebase(ks, 0);
      const ExpanderResult ex = find_expander(start, view, k + t, ep);
      if (ex.used_fallback) ++res.fallbacks;
      last_frac = ex.reach_fraction;
      if (!ex.found) {
        for (auto& x : *next) run.release(x, detail::kNextTarget);
        continue;
      }
      // Fix K'_s and the path up to it; T^s is finished.
      commit_segment(prev, ex.clique.vertices);
      for (auto& x : T) run.release(x, detail::kTarget);
      for (auto& x : *next) run.retag(x, detail::kNextTarget, detail::kTarget);
      T = std::move(*next);
      prev = expand_tracked(CliqueSet::from_sorted_flat(0, k, ex.clique.vertices), view, t);
      ks = prev.final_set();
      stepped = true;
    }
    if (!stepped) {
      fail("step", s, "find_expander found no clique reaching the target");
      res.failure->attempts = prm.retries + 1;
      res.failure->reach_fraction = last_frac;
      res.failure->window = t;
      res.failure->set_sizes = {nt, ks.size()};
      return res;
    }
    res.steps_done = s;
  }
  audit(res.s_cap);

  // Close: expand K^s through (T^s_{t-k+1..t}, S', S_1..S_k) into K*'s backward family.
  CliqueSet back_family;
  {
    std::vector<Vertex> flat;
    const CliqueSet& bf = backward.final_set();
    for (std::size_t r = 0; r < bf.size(); ++r) {
      auto rv = detail::reversed(bf.member(r));
      flat.insert(flat.end(), rv.begin(), rv.end());
    }
    back_family = CliqueSet::from_flat(0, k, std::move(flat));
  }
  for (std::size_t attempt = 0; attempt <= prm.retries; ++attempt) {
    if (attempt > 0) ++res.redraws;
    auto closer = run.draw_all(nt, detail::kCloser);
    if (!closer) return fail("close", res.s_cap, "not enough free vertices for S'");
    std::vector<std::vector<Vertex>> parts(T.end() - static_cast<std::ptrdiff_t>(k), T.end());
    parts.insert(parts.end(), closer->begin(), closer->end());
    parts.insert(parts.end(), S.begin(), S.begin() + static_cast<std::ptrdiff_t>(k));
    const TupleView view = run.view(parts);
    const TrackedExpansion te = expand_tracked(detail::rebase(ks, 0), view, t + k);
    const CliqueSet& reached = te.final_set();
    double frac = 0;
    reach_ok(reached, view, t + k, &frac);
    res.close_reach = frac;
    std::optional<std::size_t> q;
    for (std::size_t r = 0; r < reached.size() && !q; ++r)
      if (back_family.contains(reached.member(r))) q = r;
    if (!q) {
      for (auto& x : *closer) run.release(x, detail::kCloser);
      if (attempt == prm.retries) {
        fail("close", res.s_cap, "reach of K^s misses the backward family of K*");
        res.failure->attempts = attempt + 1;
        res.failure->reach_fraction = frac;
        res.failure->set_sizes = {nt, reached.size(), back_family.size()};
        return res;
      }
      continue;
    }
    const auto seg = te.path_to(*q);  // K (k) + S' (t) + Q (k)
    const std::span<const Vertex> kfinal(seg.data(), k);
    commit_segment(prev, kfinal);
    const std::size_t main_len = path.size();
    path.insert(path.end(), seg.begin() + static_cast<std::ptrdiff_t>(k), seg.end());
    const auto qrev = detail::reversed(reached.member(*q));
    const auto bseg = backward.path_to(backward.final_set().find(qrev));  // K* reversed, S_t .. S_1
    // bseg[k .. k+t-k-1] lie in S_t .. S_{k+1}; walk them forwards.
    for (std::size_t i = k + t - k; i-- > k;) path.push_back(bseg[i]);

    // Seams: every (k+1)-window crossing a splice point must be a clique.
    res.cycle.k = k;
    res.cycle.vertices = path;
    const std::size_t L = path.size();
    for (std::size_t seam : {main_len, main_len + t, main_len + t + k, std::size_t{0}}) {
      for (std::size_t off = 0; off <= k; ++off) {
        const std::size_t a = (seam + L - off) % L;
        for (std::size_t i = 0; i <= k; ++i)
          for (std::size_t j = i + 1; j <= k; ++j) {
            const Vertex u = path[(a + i) % L], v = path[(a + j) % L];
            if (!run.graph().adjacent(u, v)) {
              fail("seam", res.s_cap, "splice at position " + std::to_string(seam) + " misses edge " +
                                          std::to_string(u) + "-" + std::to_string(v));
              return res;
            }
          }
      }
    }
    const auto chk = verify_power_cycle(run.graph(), res.cycle);
    if (!chk.ok) return fail("verify", res.s_cap, chk.reason);
    if (static_cast<double>(L) < (1.0 - prm.epsilon) * static_cast<double>(run.graph().n()) - 1e-9)
      return fail("length", res.s_cap,
                  "cycle on " + std::to_string(L) + " vertices is shorter than (1 - eps) N");
    res.success = true;
    return res;
  }
  return res;
}

}  // namespace kpower
