#include <gtest/gtest.h>

#include "kpower/errors.hpp"
#include "kpower/models.hpp"
#include "kpower/power_cycle.hpp"
#include "oracles.hpp"

using namespace kpower;

namespace {

Graph circulant(std::size_t n, std::size_t k) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 1; d <= k; ++d) {
      const auto u = static_cast<Vertex>(i), v = static_cast<Vertex>((i + d) % n);
      e.emplace_back(std::min(u, v), std::max(u, v));
    }
  return Graph(n, e);
}

PowerCycle natural(std::size_t n, std::size_t k) {
  PowerCycle c;
  c.k = k;
  for (std::size_t i = 0; i < n; ++i) c.vertices.push_back(static_cast<Vertex>(i));
  return c;
}

RegularPartition partition_of(const std::vector<std::vector<Vertex>>& classes, const Graph& g, double p, double d) {
  RegularPartition part;
  part.classes.push_back({});
  for (const auto& c : classes) part.classes.push_back(c);
  part.class_size = classes.front().size();
  RegularityParams prm;
  prm.p = p;
  prm.d = d;
  detail::evaluate_pairs(g, part, prm, 1);
  return part;
}

}  // namespace

TEST(Verify, CirculantAndChordDeleted) {
  const Graph g = circulant(10, 2);
  EXPECT_TRUE(verify_power_cycle(g, natural(10, 2)).ok);
  const Graph h = g.without_edges({{3, 5}});
  auto chk = verify_power_cycle(h, natural(10, 2));
  EXPECT_FALSE(chk.ok);
  ASSERT_TRUE(chk.violation);
  EXPECT_EQ(*chk.violation, (Edge{3, 5}));
}

TEST(Verify, HamiltonSemanticsForKOne) {
  const Graph c6 = circulant(6, 1);
  PowerCycle c{{0, 5, 4, 3, 2, 1}, 1};
  EXPECT_TRUE(verify_power_cycle(c6, c).ok);
  PowerCycle bad{{0, 2, 1, 3, 4, 5}, 1};
  EXPECT_FALSE(verify_power_cycle(c6, bad).ok);
}

TEST(Verify, RejectsRepeatsRangeAndEmpty) {
  const Graph k5 = Graph::complete(5);
  EXPECT_FALSE(verify_power_cycle(k5, PowerCycle{{0, 1, 1}, 1}).ok);
  EXPECT_FALSE(verify_power_cycle(k5, PowerCycle{{0, 1, 9}, 1}).ok);
  EXPECT_FALSE(verify_power_cycle(k5, PowerCycle{{}, 2}).ok);
}

TEST(ExactLongest, Examples) {
  EXPECT_EQ(exact_longest_power_cycle(Graph::complete(6), 2).length(), 6u);
  auto k222 = complete_multipartite({2, 2, 2});
  auto c = exact_longest_power_cycle(*k222.graph, 2);
  EXPECT_EQ(c.length(), 6u);
  EXPECT_TRUE(verify_power_cycle(*k222.graph, c).ok);
  EXPECT_EQ(exact_longest_power_cycle(Graph::complete(3), 2).length(), 0u);
  EXPECT_THROW(exact_longest_power_cycle(Graph::complete(13), 2), Refused);
}

TEST(ExactLongest, TriangleKillerOnK6) {
  // every edge inside N(v) goes, which is all of K_5; only a star survives
  auto [h, rep] = adversary_triangle_killer(Graph::complete(6), {0});
  EXPECT_EQ(h.edge_count(), 5u);
  EXPECT_EQ(oracle::longest_power_cycle(h, 2), 0u);
  EXPECT_EQ(exact_longest_power_cycle(h, 2).length(), 0u);
}

TEST(ExactLongest, MatchesPermutationOracle) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const std::size_t n = 5 + s % 4;
    auto inst = oracle::random_multipartite(700 + s, {n}, 0.55 + 0.01 * static_cast<double>(s % 30), true);
    for (std::size_t k : {1u, 2u}) {
      auto c = exact_longest_power_cycle(*inst.graph, k);
      ASSERT_EQ(c.length(), oracle::longest_power_cycle(*inst.graph, k)) << "seed " << s << " k " << k;
      if (c.length()) {
        EXPECT_TRUE(verify_power_cycle(*inst.graph, c).ok);
        EXPECT_EQ(c.vertices.front(), *std::min_element(c.vertices.begin(), c.vertices.end()));
      }
    }
  }
}

TEST(ExactLongest, ExtremalGraphsHaveNoSpanningSquareCycle) {
  for (std::size_t n = 7; n <= 12; ++n) {
    auto b = extremal_graph(n, 2);
    const auto len = exact_longest_power_cycle(*b.graph, 2).length();
    EXPECT_LT(len, n);
    if (n <= 9) EXPECT_EQ(len, oracle::longest_power_cycle(*b.graph, 2));
    EXPECT_EQ(min_degree(*b.graph), static_cast<std::size_t>(std::llround(2.0 * static_cast<double>(n - 1) / 3.0)));
  }
}

TEST(Reduced, CompleteEmptyAndPartite) {
  auto kn = Graph::complete(40);
  std::vector<std::vector<Vertex>> classes;
  for (Vertex c = 0; c < 4; ++c) {
    classes.emplace_back();
    for (Vertex v = 0; v < 10; ++v) classes.back().push_back(c * 10 + v);
  }
  auto full = build_reduced(partition_of(classes, kn, 1.0, 0.5), 0.5, 1.0);
  EXPECT_EQ(full.graph.edge_count(), 6u);
  EXPECT_EQ(full.clusters, (std::vector<std::size_t>{1, 2, 3, 4}));
  auto none = build_reduced(partition_of(classes, Graph::empty(40), 0.5, 0.5), 0.5, 0.5);
  EXPECT_EQ(none.graph.edge_count(), 0u);

  auto [h, rep] = adversary_partite(Graph::complete(60), 2, 0.0, 4);
  std::vector<std::vector<Vertex>> aligned;
  for (const auto& part : rep.planted_parts) {
    aligned.emplace_back(part.begin(), part.begin() + 10);
    aligned.emplace_back(part.begin() + 10, part.end());
  }
  auto rg = build_reduced(partition_of(aligned, h, 1.0, 0.5), 0.5, 1.0);
  for (Vertex a = 0; a < 6; ++a)
    for (Vertex b = a + 1; b < 6; ++b) EXPECT_EQ(rg.graph.adjacent(a, b), a / 2 != b / 2);
  EXPECT_THROW(build_reduced(partition_of({classes[0], classes[1]}, kn, 1.0, 0.5), 0.5, 1.0), std::invalid_argument);
}

TEST(ClusterCycle, Examples) {
  ReducedGraph k7{Graph::complete(7), {}};
  for (std::size_t k = 1; k < 7; ++k) {
    auto c = find_cluster_power_cycle(k7, k);
    ASSERT_TRUE(c);
    EXPECT_EQ(*c, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
  }
  ReducedGraph c6{circulant(6, 1), {}};
  auto h = find_cluster_power_cycle(c6, 1);
  ASSERT_TRUE(h);
  PowerCycle hc{{}, 1};
  for (auto x : *h) hc.vertices.push_back(static_cast<Vertex>(x));
  EXPECT_TRUE(verify_power_cycle(c6.graph, hc).ok);
  EXPECT_FALSE(find_cluster_power_cycle(c6, 2));

  ReducedGraph k222{*complete_multipartite({2, 2, 2}).graph, {}};
  auto sq = find_cluster_power_cycle(k222, 2);
  ASSERT_TRUE(sq);
  PowerCycle sc{{}, 2};
  for (auto x : *sq) sc.vertices.push_back(static_cast<Vertex>(x));
  EXPECT_TRUE(verify_power_cycle(k222.graph, sc).ok);
  EXPECT_THROW(find_cluster_power_cycle(ReducedGraph{Graph::complete(17), {}}, 2), Refused);
}

TEST(ClusterCycle, AgreesWithOracleOnSmallGraphs) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const std::size_t n = 5 + s % 4;
    auto inst = oracle::random_multipartite(1300 + s, {n}, 0.75, true);
    ReducedGraph rg{*inst.graph, {}};
    for (std::size_t k : {1u, 2u}) {
      auto c = find_cluster_power_cycle(rg, k);
      ASSERT_EQ(c.has_value(), oracle::longest_power_cycle(*inst.graph, k) == n) << "seed " << s;
    }
  }
}
