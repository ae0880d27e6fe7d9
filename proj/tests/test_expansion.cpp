#include <gtest/gtest.h>

#include <cmath>

#include "kpower/errors.hpp"
#include "kpower/expansion.hpp"
#include "kpower/models.hpp"
#include "oracles.hpp"

using namespace kpower;

namespace {

std::vector<std::vector<Vertex>> members(const CliqueSet& s) {
  std::vector<std::vector<Vertex>> out;
  for (std::size_t r = 0; r < s.size(); ++r) out.emplace_back(s.member(r).begin(), s.member(r).end());
  return out;
}

CliqueSet as_set(std::size_t w, std::size_t k, const std::vector<std::vector<Vertex>>& cs) {
  std::vector<Vertex> flat;
  for (const auto& c : cs) flat.insert(flat.end(), c.begin(), c.end());
  return CliqueSet::from_flat(w, k, flat);
}

ExpansionParams eparams(std::size_t k, double delta, double p) {
  ExpansionParams e;
  e.k = k;
  e.delta = delta;
  e.p = p;
  return e;
}

}  // namespace

TEST(ExpandStep, EmptyAndComplete) {
  auto b = complete_multipartite({3, 3, 3, 3});
  CliqueSet none(0, 2);
  auto r = expand_step(none, b.view);
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.window_start(), 1u);
  auto all = enumerate_canonical_cliques(b.view, 0, 2);
  EXPECT_EQ(members(expand_step(all, b.view)), members(enumerate_canonical_cliques(b.view, 1, 2)));
  EXPECT_THROW(expand_step(enumerate_canonical_cliques(b.view, 2, 2), b.view), std::out_of_range);
}

TEST(ExpandStep, SixVertexExample) {
  // a b | c d | e f, all cross pairs except c-e
  std::vector<Edge> e;
  for (Vertex u = 0; u < 6; ++u)
    for (Vertex v = u + 1; v < 6; ++v)
      if (u / 2 != v / 2 && !(u == 2 && v == 4)) e.emplace_back(u, v);
  auto g = std::make_shared<const Graph>(6, e);
  TupleView view(g, {{0, 1}, {2, 3}, {4, 5}});
  auto out = expand_step(as_set(0, 2, {{0, 2}}), view);
  EXPECT_EQ(members(out), (std::vector<std::vector<Vertex>>{{2, 5}}));
}

TEST(ExpandStep, MatchesProjectionOracle) {
  Rng r(31337);
  for (std::uint64_t s = 0; s < 80; ++s) {
    const std::size_t t = 3 + r.below(3);
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < t; ++i) sizes.push_back(2 + r.below(6));
    auto inst = oracle::random_multipartite(9000 + s, sizes, 0.3 + 0.6 * r.uniform01());
    TupleView view(inst.graph, inst.parts);
    for (std::size_t k = 1; k + 1 <= t; ++k)
      for (std::size_t w = 0; w + k + 1 <= t; ++w) {
        auto all = oracle::canonical_cliques(*inst.graph, inst.parts, w, k);
        std::vector<std::vector<Vertex>> start;
        for (const auto& c : all)
          if (r.bernoulli(0.5)) start.push_back(c);
        auto got = expand_step(as_set(w, k, start), view);
        ASSERT_EQ(members(got), oracle::expand_step(*inst.graph, inst.parts, w, start)) << "seed " << s;
      }
  }
}

TEST(ExpandStep, MonotoneAndCeiling) {
  auto b = gen_blowup(power_pattern(5, 2, false), 12, 0.6, 8);
  auto all = enumerate_canonical_cliques(b.view, 0, 2);
  auto next_all = enumerate_canonical_cliques(b.view, 1, 2);
  EXPECT_TRUE(expand_step(all, b.view).is_subset_of(next_all));
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto big = random_subset(all, all.size() / 2, s);
    auto small = random_subset(big, big.size() / 2, s + 100);
    ASSERT_TRUE(small.is_subset_of(big));
    EXPECT_TRUE(expand_step(small, b.view).is_subset_of(expand_step(big, b.view)));
  }
}

TEST(ExpandThrough, TrivialCases) {
  auto b = complete_multipartite({3, 4, 3, 4, 3});
  auto all = enumerate_canonical_cliques(b.view, 0, 2);
  auto same = expand_through(all, b.view, 0);
  EXPECT_TRUE(same.counts.empty());
  EXPECT_EQ(members(same.final_set), members(all));
  auto tr = expand_through(all, b.view, 3);
  ASSERT_EQ(tr.windows, (std::vector<std::size_t>{1, 2, 3}));
  for (double f : tr.fractions) EXPECT_DOUBLE_EQ(f, 1.0);
  EXPECT_THROW(expand_through(all, b.view, 4), std::out_of_range);
}

TEST(ExpandTracked, PathsAreCanonicalKPaths) {
  auto b = gen_blowup(power_pattern(7, 2, false), 10, 0.6, 3);
  auto all = enumerate_canonical_cliques(b.view, 0, 2);
  auto start = random_subset(all, 5, 1);
  auto te = expand_tracked(start, b.view, 5);
  EXPECT_EQ(members(te.final_set()), members(expand_through(start, b.view, 5).final_set));
  for (std::size_t r = 0; r < te.final_set().size(); ++r) {
    auto path = te.path_to(r);
    ASSERT_EQ(path.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(b.view.part_of(path[i]), static_cast<int>(i));
    for (std::size_t i = 0; i + 1 < 7; ++i)
      for (std::size_t d = 1; d <= 2 && i + d < 7; ++d) EXPECT_TRUE(b.graph->adjacent(path[i], path[i + d]));
    const std::vector<Vertex> head(path.begin(), path.begin() + 2), tail(path.end() - 2, path.end());
    EXPECT_TRUE(start.contains(head));
    EXPECT_EQ(tail, std::vector<Vertex>(te.final_set().member(r).begin(), te.final_set().member(r).end()));
  }
}

TEST(MainExpansion, SmallStartCoversAlmostEverything) {
  int ok = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto b = gen_blowup(power_pattern(4, 2, false), 50, 0.6, s);
    auto a = main_expansion_audit(b.view, eparams(2, 0.05, 0.6), s);
    ok += a.final_fraction >= a.bound;
  }
  EXPECT_GE(ok, 85);
}

TEST(FindExpander, CompleteAndSingleton) {
  auto b = complete_multipartite({3, 3, 3, 3, 3, 3});
  auto all = enumerate_canonical_cliques(b.view, 0, 2);
  auto res = find_expander(all, b.view, 4, eparams(2, 0.01, 1.0));
  EXPECT_TRUE(res.found);
  EXPECT_EQ(res.reach.size(), 9u);
  EXPECT_DOUBLE_EQ(res.reach_fraction, 1.0);

  auto g = gen_blowup(power_pattern(6, 2, false), 8, 0.7, 2);
  auto one = random_subset(enumerate_canonical_cliques(g.view, 0, 2), 1, 5);
  auto r1 = find_expander(one, g.view, 5, eparams(2, 0.01, 0.7));
  EXPECT_EQ(r1.clique.vertices, std::vector<Vertex>(one.member(0).begin(), one.member(0).end()));
  EXPECT_EQ(members(r1.reach), members(expand_through(one, g.view, 3).final_set));
  EXPECT_THROW(find_expander(one, g.view, 3, eparams(2, 0.01, 0.7)), std::invalid_argument);
  EXPECT_THROW(find_expander(CliqueSet(0, 2), g.view, 4, eparams(2, 0.01, 0.7)), std::invalid_argument);
  EXPECT_THROW(find_expander(one, g.view, 4, eparams(3, 0.01, 0.7)), std::invalid_argument);
}

TEST(FindExpander, CyclicBlowupAtBoundLength) {
  // ell = ceil(3 k^2 ln N) with N = ell * n; 100 windows of 40 is a fixed point.
  const std::size_t n = 40, ell = 100;
  ASSERT_EQ(static_cast<std::size_t>(std::ceil(12 * std::log(static_cast<double>(ell * n)))), ell);
  int ok = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto b = gen_blowup(power_pattern(ell, 2, true), n, 0.7, s);
    auto all = enumerate_canonical_cliques(b.view, 0, 2);
    auto prm = eparams(2, 0.04, 0.7);
    auto res = find_expander(all, b.view, ell, prm);
    EXPECT_FALSE(res.ell_below_bound);
    // reach of the returned clique, recomputed on its own
    auto single = as_set(0, 2, {res.clique.vertices});
    auto again = expand_through(single, b.view, res.final_window).final_set;
    ASSERT_EQ(members(again), members(res.reach));
    ok += res.found && res.reach_fraction >= res.target_fraction;
  }
  EXPECT_GE(ok, 17);
}

TEST(FindExpander, TightTargetFindsNearFullReach) {
  // delta small enough that the target is meaningful: 1 - 20*2*0.005 = 0.8
  int ok = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto b = gen_blowup(power_pattern(10, 2, false), 30, 0.7, s);
    auto all = enumerate_canonical_cliques(b.view, 0, 2);
    auto res = find_expander(all, b.view, 10, eparams(2, 0.005, 0.7));
    ok += res.found && res.reach_fraction >= 0.8;
  }
  EXPECT_GE(ok, 17);
}

TEST(OneStep, Trivial) {
  auto b = complete_multipartite({6, 6, 6});
  TypicalityParams gate;
  gate.p = 1.0;
  auto full = one_step_expansion_audit(b.view, 1.0, eparams(2, 0.05, 1.0), gate, 1);
  EXPECT_DOUBLE_EQ(full.measured, 1.0);
  EXPECT_GE(full.measured, 1 - 9 * 0.05);
  auto zero = one_step_expansion_audit(b.view, 0.0, eparams(2, 0.05, 1.0), gate, 1);
  EXPECT_EQ(zero.measured, 0.0);
  EXPECT_EQ(zero.start_size, 0u);
}

TEST(OneStep, RefusesWhenGateFails) {
  auto b = gen_blowup(Graph::complete(3), 30, 0.6, 1);
  // one part pair half empty: not super-typical
  std::vector<Edge> cut;
  for (Vertex u : b.view.part(0))
    for (Vertex w : b.view.part(1))
      if (u < 15 && b.graph->adjacent(u, w)) cut.emplace_back(u, w);
  auto g = std::make_shared<const Graph>(b.graph->without_edges(cut));
  TupleView v(g, {b.view.part(0), b.view.part(1), b.view.part(2)});
  TypicalityParams gate;
  gate.p = 0.6;
  EXPECT_THROW(one_step_expansion_audit(v, 0.3, eparams(2, 0.1, 0.6), gate, 1), Refused);
}

TEST(OneStep, BlowupMeetsBound) {
  TypicalityParams gate;
  gate.p = 0.6;
  gate.epsilon = 0.3;
  gate.delta = 0.25;
  gate.sample_trials = 50;
  int ok = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto b = gen_blowup(Graph::complete(3), 60, 0.6, s);
    gate.seed = s;
    auto a = one_step_expansion_audit(b.view, 0.3, eparams(2, 0.1, 0.6), gate, s);
    // kappa - 3 kappa delta - 6 delta is vacuous here; 0.15 is the threshold checked
    EXPECT_NEAR(a.bound, -0.39, 1e-12);
    ok += a.measured >= 0.15;
  }
  EXPECT_GE(ok, 90);
}

TEST(Halving, SomeHalfAlwaysExpands) {
  std::size_t applicable = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto b = gen_blowup(power_pattern(6, 2, false), 40, 0.6, s);
    auto all = enumerate_canonical_cliques(b.view, 0, 2);
    auto prm = eparams(2, 0.02, 0.6);
    auto a = random_subset(all, static_cast<std::size_t>(std::ceil(0.02 * x_measured(b.view, 0, 2))), s);
    auto h = halving_audit(a, b.view, 4, prm, 10, s);
    if (!h.applicable) continue;
    ++applicable;
    EXPECT_EQ(h.partitions_ok, h.partitions_tested);
  }
  EXPECT_GE(applicable, 45u);
}

TEST(RandomSubset, SizeOrderDeterminism) {
  auto b = complete_multipartite({5, 5});
  auto all = enumerate_canonical_cliques(b.view, 0, 2);
  auto a = random_subset(all, 7, 3), c = random_subset(all, 7, 3);
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(members(a), members(c));
  EXPECT_TRUE(a.is_subset_of(all));
  EXPECT_EQ(random_subset(all, 99, 3).size(), 25u);
}
