#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kpower/errors.hpp"
#include "kpower/graph.hpp"
#include "kpower/rng.hpp"

namespace kpower {

struct RegularityParams {
  double epsilon = 0.2;
  double p = 0.5;
  double d = 0.5;
  std::size_t q = 1;
  double mu = 0.5;
  double nu = 0.1;
  std::size_t exact_cap = 24;
  std::size_t sample_trials = 200;
  double subset_fraction = 0.5;

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("d must lie in (0, 1]");
    if (q < 1) throw std::invalid_argument("q must be at least 1");
  }
};

enum class RegularityStatus { certified, refuted, undetermined };
enum class RegularityMode { exact, sampled };

inline const char* to_string(RegularityStatus s) {
  switch (s) {
    case RegularityStatus::certified: return "certified-regular";
    case RegularityStatus::refuted: return "refuted";
    default: return "undetermined";
  }
}
inline const char* to_string(RegularityMode m) { return m == RegularityMode::exact ? "exact" : "sampled"; }

struct RegularityVerdict {
  RegularityStatus status = RegularityStatus::undetermined;
  RegularityMode mode = RegularityMode::sampled;
  // Exact mode: the subset pair of maximum deviation. Sampled mode: the
  // first refuting sample. Empty if nothing qualifying was examined.
  std::optional<std::pair<std::vector<Vertex>, std::vector<Vertex>>> witness;
  double deviation = 0.0;
  double pair_density = 0.0;
  std::size_t trials = 0;

  bool refuted() const { return status == RegularityStatus::refuted; }
};

/// ceil(x * n) with a small tolerance so that 0.4 * 10 gives 4, and at least 1.
inline std::size_t min_subset_size(double fraction, std::size_t n) {
  const auto s = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(s, 1, std::max<std::size_t>(n, 1));
}

namespace detail {

inline bool exact_envelope(std::size_t n, double eps) {
  return n <= 16 || min_subset_size(eps, n) + 4 >= n;
}

inline double pair_density(const Graph& g, const std::vector<Vertex>& a, const std::vector<Vertex>& b) {
  if (a.empty() || b.empty()) return 0.0;
  return static_cast<double>(edges_between(g, a, b)) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

// Calls f(mask) for every subset of [0, n) of size >= lo. For n <= 16 the
// masks are scanned directly; otherwise only complements of size <= n - lo
// are generated.
template <class F>
void for_each_large_subset(std::size_t n, std::size_t lo, F&& f) {
  if (n <= 16) {
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask)
      if (static_cast<std::size_t>(std::popcount(mask)) >= lo) f(mask);
    return;
  }
  const std::uint32_t full = n == 32 ? ~0U : ((1U << n) - 1);
  const std::size_t drop = n - lo;
  std::vector<std::size_t> idx;
  auto rec = [&](auto&& self, std::size_t from, std::uint32_t removed) -> void {
    f(full & ~removed);
    if (idx.size() == drop) return;
    for (std::size_t i = from; i < n; ++i) {
      idx.push_back(i);
      self(self, i + 1, removed | (1U << i));
      idx.pop_back();
    }
  };
  rec(rec, 0, 0);
}

}  // namespace detail

/// Exhaustive (eps, p)-regularity check. Every subset A' of one side with
/// |A'| >= ceil(eps |A|) is enumerated; for each A' and each size s of the
/// other side the extreme values of e(A', B') over |B'| = s are the sums of
/// the s largest and s smallest degrees into A', so every qualifying pair is
/// covered. The enumerated side must be within the envelope |A| <= 16 or
/// ceil(eps |A|) >= |A| - 4; both sides must be within cap.
inline RegularityVerdict check_regular_exact(const Graph& g, const std::vector<Vertex>& v1,
                                             const std::vector<Vertex>& v2, double eps, double p,
                                             std::size_t cap = 24) {
  if (v1.size() > cap || v2.size() > cap)
    throw Refused("check_regular_exact: part sizes " + std::to_string(v1.size()) + ", " + std::to_string(v2.size()) +
                  " exceed the exact cap " + std::to_string(cap) + "; use check_regular_sampled");
  const bool first_ok = detail::exact_envelope(v1.size(), eps);
  const bool second_ok = detail::exact_envelope(v2.size(), eps);
  if (!first_ok && !second_ok)
    throw Refused("check_regular_exact: neither side is within the enumeration envelope; use check_regular_sampled");

  RegularityVerdict out;
  out.mode = RegularityMode::exact;
  out.pair_density = detail::pair_density(g, v1, v2);
  if (v1.empty() || v2.empty()) {
    out.status = RegularityStatus::certified;
    return out;
  }

  // Enumerate the side with fewer subsets to visit.
  bool swap_sides = !first_ok;
  if (first_ok && second_ok && v2.size() < v1.size()) swap_sides = true;
  const auto& as = swap_sides ? v2 : v1;
  const auto& bs = swap_sides ? v1 : v2;
  const std::size_t na = as.size(), nb = bs.size();
  const std::size_t a_lo = min_subset_size(eps, na), b_lo = min_subset_size(eps, nb);
  const double d = out.pair_density;

  // adj[b] = bitmask over positions of `as` adjacent to bs[b].
  std::vector<std::uint32_t> adj(nb, 0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t a = 0; a < na; ++a)
      if (g.adjacent(bs[b], as[a])) adj[b] |= 1U << a;

  double best = -1.0;
  std::uint32_t best_mask = 0;
  std::size_t best_s = 0;
  bool best_top = true;
  std::vector<std::pair<int, std::size_t>> deg(nb);
  detail::for_each_large_subset(na, a_lo, [&](std::uint32_t mask) {
    const auto sa = static_cast<double>(std::popcount(mask));
    for (std::size_t b = 0; b < nb; ++b) deg[b] = {std::popcount(adj[b] & mask), b};
    std::sort(deg.begin(), deg.end(), [](auto x, auto y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
    std::uint64_t top = 0, bottom = 0;
    for (std::size_t s = 1; s <= nb; ++s) {
      top += static_cast<std::uint64_t>(deg[s - 1].first);
      bottom += static_cast<std::uint64_t>(deg[nb - s].first);
      if (s < b_lo) continue;
      const double denom = sa * static_cast<double>(s);
      const double hi = static_cast<double>(top) / denom - d;
      const double lo = d - static_cast<double>(bottom) / denom;
      if (hi > best + 1e-15) {
        best = hi;
        best_mask = mask;
        best_s = s;
        best_top = true;
      }
      if (lo > best + 1e-15) {
        best = lo;
        best_mask = mask;
        best_s = s;
        best_top = false;
      }
    }
  });

  // Rebuild the witness.
  std::vector<Vertex> wa, wb;
  for (std::size_t a = 0; a < na; ++a)
    if (best_mask & (1U << a)) wa.push_back(as[a]);
  for (std::size_t b = 0; b < nb; ++b) deg[b] = {std::popcount(adj[b] & best_mask), b};
  std::sort(deg.begin(), deg.end(), [](auto x, auto y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
  for (std::size_t s = 0; s < best_s; ++s) wb.push_back(bs[deg[best_top ? s : nb - 1 - s].second]);
  std::sort(wb.begin(), wb.end());
  if (swap_sides) std::swap(wa, wb);

  out.deviation = std::max(best, 0.0);
  out.witness = std::make_pair(std::move(wa), std::move(wb));
  out.status = out.deviation > eps * p + 1e-12 ? RegularityStatus::refuted : RegularityStatus::certified;
  return out;
}

/// One-sided Monte Carlo refuter. Each trial draws uniform subsets of size
/// max(ceil(fraction |V_i|), ceil(eps |V_i|)) from both sides using the
/// stream derive_seed(seed, trial). Stops at the first refuting sample.
inline RegularityVerdict check_regular_sampled(const Graph& g, const std::vector<Vertex>& v1,
                                               const std::vector<Vertex>& v2, double eps, double p,
                                               std::size_t trials, double subset_fraction, std::uint64_t seed) {
  RegularityVerdict out;
  out.mode = RegularityMode::sampled;
  out.pair_density = detail::pair_density(g, v1, v2);
  if (v1.empty() || v2.empty()) return out;
  const std::size_t s1 = std::max(min_subset_size(subset_fraction, v1.size()), min_subset_size(eps, v1.size()));
  const std::size_t s2 = std::max(min_subset_size(subset_fraction, v2.size()), min_subset_size(eps, v2.size()));

  std::vector<Vertex> a = v1, b = v2;
  Bitset mask(g.n());
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, trial));
    a = v1;
    b = v2;
    rng.select_prefix(a, s1);
    rng.select_prefix(b, s2);
    mask.clear();
    for (std::size_t i = 0; i < s2; ++i) mask.set(b[i]);
    std::uint64_t e = 0;
    for (std::size_t i = 0; i < s1; ++i) e += g.neighbors(a[i]).intersect_count(mask);
    const double dev = std::abs(static_cast<double>(e) / (static_cast<double>(s1) * static_cast<double>(s2)) - out.pair_density);
    out.trials = trial + 1;
    if (dev > out.deviation) out.deviation = dev;
    if (dev > eps * p + 1e-12) {
      std::vector<Vertex> wa(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(s1));
      std::vector<Vertex> wb(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(s2));
      std::sort(wa.begin(), wa.end());
      std::sort(wb.begin(), wb.end());
      out.deviation = dev;
      out.witness = std::make_pair(std::move(wa), std::move(wb));
      out.status = RegularityStatus::refuted;
      return out;
    }
  }
  return out;
}

struct PairInfo {
  std::size_t i = 0, j = 0;  // class indices, 1 <= i < j
  double density = 0.0;
  RegularityStatus status = RegularityStatus::undetermined;
  bool good = false;  // not refuted and density >= d p
  // Chunked partitions only: parent pair was good, and the measured density
  // lies in (1 +- eps') times the parent's.
  bool expected_regular = false;
  bool density_inherited = false;
};

/// classes[0] is the exceptional class V_0; classes 1..k share class_size.
struct RegularPartition {
  std::vector<std::vector<Vertex>> classes;
  std::size_t class_size = 0;
  std::vector<PairInfo> pairs;
  std::vector<std::vector<std::size_t>> partners;  // partners[i] for i >= 1; partners[0] empty
  bool property = false;                           // every class has >= mu k partners
  std::size_t refinement_rounds = 0;
  std::vector<std::size_t> parent;  // chunked partitions: parent class of each class

  std::size_t k() const { return classes.empty() ? 0 : classes.size() - 1; }

  const PairInfo* pair(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    for (const auto& pi : pairs)
      if (pi.i == i && pi.j == j) return &pi;
    return nullptr;
  }
};

namespace detail {

inline void evaluate_pairs(const Graph& g, RegularPartition& part, const RegularityParams& params,
                           std::uint64_t seed) {
  part.pairs.clear();
  const std::size_t k = part.k();
  for (std::size_t i = 1; i <= k; ++i)
    for (std::size_t j = i + 1; j <= k; ++j) {
      auto v = check_regular_sampled(g, part.classes[i], part.classes[j], params.epsilon, params.p,
                                     params.sample_trials, params.subset_fraction, derive_seed(seed, {i, j}));
      PairInfo pi;
      pi.i = i;
      pi.j = j;
      pi.density = v.pair_density;
      pi.status = v.status;
      pi.good = !v.refuted() && v.pair_density >= params.d * params.p - 1e-12;
      part.pairs.push_back(pi);
    }
}

inline void compute_partners(RegularPartition& part, const RegularityParams& params) {
  const std::size_t k = part.k();
  part.partners.assign(k + 1, {});
  for (const auto& pi : part.pairs)
    if (pi.good) {
      part.partners[pi.i].push_back(pi.j);
      part.partners[pi.j].push_back(pi.i);
    }
  for (auto& ps : part.partners) std::sort(ps.begin(), ps.end());
  part.property = k > 0;
  for (std::size_t i = 1; i <= k; ++i)
    if (static_cast<double>(part.partners[i].size()) < params.mu * static_cast<double>(k) - 1e-9) part.property = false;
}

}  // namespace detail

/// Random equipartition into m classes (remainder to V_0), then witness-driven
/// refinement: while some pair is refuted by the sampled check and the class
/// count can double within max_classes, each class is reordered with its
/// witness members first and cut into two halves (odd leftovers go to V_0).
inline RegularPartition build_nice_partition(const Graph& g, const RegularityParams& params, std::size_t m,
                                             std::uint64_t seed, std::size_t max_classes = 64) {
  params.validate();
  const std::size_t n = g.n();
  if (m < 1 || n < m) throw std::invalid_argument("build_nice_partition needs 1 <= m <= N");

  std::vector<Vertex> order(n);
  std::iota(order.begin(), order.end(), Vertex{0});
  Rng rng(derive_seed(seed, 0x6e696365));
  rng.shuffle(order);

  RegularPartition part;
  part.class_size = n / m;
  part.classes.assign(m + 1, {});
  for (std::size_t i = 0; i < m * part.class_size; ++i) part.classes[1 + i / part.class_size].push_back(order[i]);
  for (std::size_t i = m * part.class_size; i < n; ++i) part.classes[0].push_back(order[i]);
  for (auto& c : part.classes) std::sort(c.begin(), c.end());

  for (std::size_t round = 0;; ++round) {
    detail::evaluate_pairs(g, part, params, derive_seed(seed, {0x7061, round}));
    const bool any_refuted = std::any_of(part.pairs.begin(), part.pairs.end(),
                                         [](const PairInfo& pi) { return pi.status == RegularityStatus::refuted; });
    const std::size_t k = part.k();
    if (!any_refuted || 2 * k > max_classes || part.class_size < 2) break;

    // Witness side per class: the first refuted pair touching the class.
    std::vector<std::vector<Vertex>> lead(k + 1);
    std::vector<bool> has(k + 1, false);
    for (const auto& pi : part.pairs) {
      if (pi.status != RegularityStatus::refuted) continue;
      auto v = check_regular_sampled(g, part.classes[pi.i], part.classes[pi.j], params.epsilon, params.p,
                                     params.sample_trials, params.subset_fraction,
                                     derive_seed(derive_seed(seed, {0x7061, round}), {pi.i, pi.j}));
      if (!v.witness) continue;
      if (!has[pi.i]) lead[pi.i] = v.witness->first, has[pi.i] = true;
      if (!has[pi.j]) lead[pi.j] = v.witness->second, has[pi.j] = true;
    }

    const std::size_t half = part.class_size / 2;
    RegularPartition next;
    next.class_size = half;
    next.classes.push_back(part.classes[0]);
    for (std::size_t i = 1; i <= k; ++i) {
      std::vector<Vertex> ordered = lead[i];
      for (Vertex v : part.classes[i])
        if (!std::binary_search(lead[i].begin(), lead[i].end(), v)) ordered.push_back(v);
      next.classes.emplace_back(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(half));
      next.classes.emplace_back(ordered.begin() + static_cast<std::ptrdiff_t>(half),
                                ordered.begin() + static_cast<std::ptrdiff_t>(2 * half));
      for (std::size_t a = 2 * half; a < ordered.size(); ++a) next.classes[0].push_back(ordered[a]);
    }
    for (auto& c : next.classes) std::sort(c.begin(), c.end());
    next.refinement_rounds = part.refinement_rounds + 1;
    part = std::move(next);
  }
  detail::compute_partners(part, params);
  return part;
}

/// Splits every class into floor(class_size / q) random chunks of size q; the
/// leftovers join V_0. Chunk pairs whose parent pair is good are tagged
/// expected-regular and carry their measured density, with
/// density_inherited = density within (1 +- eps_prime) of the parent's.
/// Pairs of chunks from the same parent are evaluated like any other pair but
/// never tagged.
inline RegularPartition chunk_partition(const Graph& g, const RegularPartition& part, std::size_t q,
                                        std::uint64_t seed, double eps_prime, const RegularityParams& params) {
  if (q < 1 || q > part.class_size) throw std::invalid_argument("chunk size must satisfy 1 <= q <= class_size");
  RegularPartition out;
  out.class_size = q;
  out.classes.push_back(part.classes.empty() ? std::vector<Vertex>{} : part.classes[0]);
  out.parent.push_back(0);
  out.refinement_rounds = part.refinement_rounds;
  const std::size_t per = part.class_size / q;
  for (std::size_t i = 1; i <= part.k(); ++i) {
    std::vector<Vertex> cls = part.classes[i];
    Rng rng(derive_seed(seed, {0x63686b, i}));
    rng.shuffle(cls);
    for (std::size_t c = 0; c < per; ++c) {
      std::vector<Vertex> chunk(cls.begin() + static_cast<std::ptrdiff_t>(c * q),
                                cls.begin() + static_cast<std::ptrdiff_t>((c + 1) * q));
      std::sort(chunk.begin(), chunk.end());
      out.classes.push_back(std::move(chunk));
      out.parent.push_back(i);
    }
    for (std::size_t a = per * q; a < cls.size(); ++a) out.classes[0].push_back(cls[a]);
  }
  std::sort(out.classes[0].begin(), out.classes[0].end());

  const std::size_t k = out.k();
  for (std::size_t i = 1; i <= k; ++i)
    for (std::size_t j = i + 1; j <= k; ++j) {
      PairInfo pi;
      pi.i = i;
      pi.j = j;
      pi.density = detail::pair_density(g, out.classes[i], out.classes[j]);
      const PairInfo* par = out.parent[i] != out.parent[j] ? part.pair(out.parent[i], out.parent[j]) : nullptr;
      pi.status = RegularityStatus::undetermined;
      if (par && par->good) {
        pi.expected_regular = true;
        pi.density_inherited = pi.density >= (1.0 - eps_prime) * par->density - 1e-12 &&
                               pi.density <= (1.0 + eps_prime) * par->density + 1e-12;
        pi.good = pi.density >= params.d * params.p - 1e-12;
      }
      out.pairs.push_back(pi);
    }
  detail::compute_partners(out, params);
  return out;
}

/// Fraction of random (Q_1, Q_2), |Q_i| = q_i, that are not refuted at
/// (eps_prime, p) and have density in the closed window (1 +- eps_prime) d(V_1, V_2).
/// Sub-pairs within the exact envelope are checked exactly, others by the
/// sampled refuter with `sub_trials` trials.
inline double inheritance_stats(const Graph& g, const std::vector<Vertex>& v1, const std::vector<Vertex>& v2,
                                std::size_t q1, std::size_t q2, double eps_prime, double p, std::size_t samples,
                                std::uint64_t seed, std::size_t sub_trials = 200) {
  if (q1 > v1.size() || q2 > v2.size()) throw std::invalid_argument("q_i must not exceed |V_i|");
  if (samples == 0) return 1.0;
  const double parent = detail::pair_density(g, v1, v2);
  std::size_t ok = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, {0x696e68, s}));
    std::vector<Vertex> a = v1, b = v2;
    rng.select_prefix(a, q1);
    rng.select_prefix(b, q2);
    a.resize(q1);
    b.resize(q2);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const bool exact = q1 <= 24 && q2 <= 24 &&
                       (detail::exact_envelope(q1, eps_prime) || detail::exact_envelope(q2, eps_prime));
    const auto v = exact ? check_regular_exact(g, a, b, eps_prime, p)
                         : check_regular_sampled(g, a, b, eps_prime, p, sub_trials, 0.5, derive_seed(seed, {0x737562, s}));
    const bool dens = v.pair_density >= (1.0 - eps_prime) * parent - 1e-12 &&
                      v.pair_density <= (1.0 + eps_prime) * parent + 1e-12;
    if (!v.refuted() && dens) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(samples);
}

}  // namespace kpower
