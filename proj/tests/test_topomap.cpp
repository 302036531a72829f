#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace topomacro;
using namespace testing_support;

namespace {

Detection det_at(Cell c, double shade = 0.5) { return {c, solid_patch(2, shade, shade, shade), 0}; }

void integrate(TopoMap& m, std::vector<Detection> dets) { m.integrate_observation(dets); }

Cell random_cell(Rng& rng, int n = 12) { return {rng.range(0, n - 1), rng.range(0, n - 1)}; }

}  // namespace

TEST(Integrate, DistantDetectionsCreateUnexploredNodes) {
  TopoMap m;
  const std::vector<Detection> dets{det_at({1, 1}), det_at({5, 5}), det_at({9, 1})};
  const auto ids = m.integrate_observation(dets);
  EXPECT_EQ(ids, (std::vector<NodeId>{0, 1, 2}));
  ASSERT_EQ(m.size(), 3u);
  for (const auto& n : m.nodes()) EXPECT_FALSE(n.explored);
  EXPECT_EQ(m.node(1).position, (Cell{5, 5}));
}

TEST(Integrate, ReobservationKeepsIdAndFirstAppearance) {
  TopoMap m;
  integrate(m, {det_at({4, 4}, 0.1)});
  const std::vector<Detection> again{det_at({4, 4}, 0.9), det_at({5, 5}, 0.9)};
  EXPECT_EQ(m.integrate_observation(again), (std::vector<NodeId>{0, 0}));
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.node(0).appearance, solid_patch(2, 0.1, 0.1, 0.1));
}

TEST(Integrate, MatchesGreedyDedupOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int radius = static_cast<int>(rng.below(3));
    TopoMap m(radius, 1);
    std::vector<Cell> oracle;
    for (int batch = 0; batch < 10; ++batch) {
      std::vector<Detection> dets;
      for (int k = 0; k < 4; ++k) dets.push_back(det_at(random_cell(rng)));
      const auto ids = m.integrate_observation(dets);
      for (std::size_t k = 0; k < dets.size(); ++k) {
        // nearest existing node within radius, ties to the smaller id; else append
        int best = -1, best_d = radius + 1;
        for (std::size_t j = 0; j < oracle.size(); ++j) {
          const int d = std::max(std::abs(oracle[j].x - dets[k].position.x), std::abs(oracle[j].y - dets[k].position.y));
          if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
          }
        }
        if (best < 0) {
          best = static_cast<int>(oracle.size());
          oracle.push_back(dets[k].position);
        }
        ASSERT_EQ(ids[k], best);
      }
    }
    ASSERT_EQ(m.size(), oracle.size());
    for (std::size_t j = 0; j < oracle.size(); ++j) EXPECT_EQ(m.nodes()[j].position, oracle[j]);
    for (std::size_t a = 0; a < oracle.size(); ++a)
      for (std::size_t b = a + 1; b < oracle.size(); ++b) EXPECT_GT(chebyshev(oracle[a], oracle[b]), radius);
  }
}

TEST(MarkExplored, AdjacentFlipsOnce) {
  TopoMap m;
  integrate(m, {det_at({3, 3}), det_at({8, 8})});
  EXPECT_EQ(m.mark_explored({4, 4}), (std::vector<NodeId>{0}));
  EXPECT_TRUE(m.node(0).explored);
  EXPECT_FALSE(m.node(1).explored);
  EXPECT_TRUE(m.mark_explored({4, 4}).empty());
  EXPECT_TRUE(m.mark_explored({5, 5}).empty());
}

TEST(MarkExplored, EpisodeFlagsMatchTrajectoryReplay) {
  TrainConfig cfg;
  cfg.n_scenes = 1;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto scene = generate_scene(seed, cfg.scene);
    TopoMap final_map;
    std::vector<TraceEvent> trace;
    Rng rng(seed);
    EpisodeOptions opt{ActionRule::UniformRandom, 0.0, 1.0, nullptr, &final_map, &trace};
    run_episode(scene, initial_params(cfg), cfg, rng, opt);

    // Replay: a node is explored once any post-step pose, taken no earlier
    // than the step that detected it, comes within explored_radius.
    std::set<NodeId> known, explored;
    std::optional<AgentPose> pending;
    auto settle = [&] {
      if (!pending) return;
      for (NodeId id : known)
        if (chebyshev(final_map.node(id).position, pending->cell) <= final_map.explored_radius()) explored.insert(id);
      pending.reset();
    };
    for (const auto& e : trace) {
      if (e.event == "forward" || e.event == "turn_left" || e.event == "turn_right") {
        settle();
        pending = e.pose;
      } else if (e.event.rfind("detect ", 0) == 0) {
        known.insert(std::stoi(e.event.substr(7)));
      }
    }
    settle();
    ASSERT_EQ(known.size(), final_map.size());
    for (const auto& n : final_map.nodes()) EXPECT_EQ(n.explored, explored.contains(n.id)) << "seed " << seed << " node " << n.id;
  }
}

TEST(RecordTraversal, KeepsMinimumCost) {
  TopoMap m;
  integrate(m, {det_at({1, 1}), det_at({6, 6})});
  EXPECT_TRUE(m.record_traversal(0, 1, 5));
  EXPECT_EQ(m.edge_cost(0, 1), 5);
  EXPECT_TRUE(m.record_traversal(1, 0, 3));
  EXPECT_EQ(m.edge_cost(0, 1), 3);
  EXPECT_EQ(m.edge_cost(1, 0), 3);
  EXPECT_FALSE(m.record_traversal(0, 1, 9));
  EXPECT_EQ(m.edge_cost(0, 1), 3);
  EXPECT_EQ(m.edges(), (std::vector<MapEdge>{{0, 1, 3}}));
}

TEST(RecordTraversal, SelfEdgeAndUnknownNode) {
  TopoMap m;
  integrate(m, {det_at({1, 1})});
  try {
    m.record_traversal(0, 0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SelfEdge);
  }
  try {
    m.record_traversal(0, 4, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownNode);
  }
}

TEST(NearestNode, SingleNodeAndTieBreak) {
  TopoMap m;
  EXPECT_THROW(m.nearest_node({0, 0}), Error);
  integrate(m, {det_at({2, 2})});
  EXPECT_EQ(m.nearest_node({9, 9}), 0);
  integrate(m, {det_at({6, 2})});
  EXPECT_EQ(m.nearest_node({4, 2}), 0);
  EXPECT_EQ(m.nearest_node({6, 4}), 1);
  EXPECT_EQ(m.nearest_node({5, 9}), 0);  // both at distance 7
}

TEST(NearestNode, MatchesLinearScan) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    TopoMap m;
    for (int k = 0; k < 8; ++k) integrate(m, {det_at(random_cell(rng, 20))});
    const Cell q = random_cell(rng, 20);
    NodeId best = 0;
    for (const auto& n : m.nodes())
      if (chebyshev(n.position, q) < chebyshev(m.node(best).position, q)) best = n.id;
    ASSERT_EQ(m.nearest_node(q), best);
  }
}

TEST(UnexploredIds, FreshAndAllExplored) {
  TopoMap m;
  integrate(m, {det_at({1, 1}), det_at({5, 5}), det_at({9, 9})});
  EXPECT_EQ(m.unexplored_ids(), (std::set<NodeId>{0, 1, 2}));
  for (Cell c : {Cell{1, 1}, Cell{5, 5}, Cell{9, 9}}) m.mark_explored(c);
  EXPECT_TRUE(m.unexplored_ids().empty());
}

TEST(UnexploredIds, InterleavedStreamMatchesSetDifference) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    TopoMap m;
    std::set<NodeId> created, flipped;
    for (int op = 0; op < 40; ++op) {
      if (rng.uniform() < 0.6) {
        for (NodeId id : m.integrate_observation(std::vector<Detection>{det_at(random_cell(rng))})) created.insert(id);
      } else {
        const Cell at = random_cell(rng);
        for (const auto& n : m.nodes())
          if (chebyshev(n.position, at) <= 1) flipped.insert(n.id);
        m.mark_explored(at);
      }
      std::set<NodeId> expected;
      std::set_difference(created.begin(), created.end(), flipped.begin(), flipped.end(),
                          std::inserter(expected, expected.end()));
      ASSERT_EQ(m.unexplored_ids(), expected);
    }
  }
}

TEST(MapFormat, RoundTripPreservesEverything) {
  TopoMap m(2, 1);
  integrate(m, {det_at({1, 1}, 0.1), det_at({6, 6}, 0.3), det_at({12, 2}, 1.0 / 3.0)});
  m.mark_explored({1, 2});
  m.record_traversal(0, 1, 7);
  m.record_traversal(2, 1, 4);
  const auto text = m.to_string();
  EXPECT_EQ(text.rfind("topomap v1 3 2 2 1\n", 0), 0u);
  const auto back = TopoMap::from_string(text);
  EXPECT_EQ(back.nodes(), m.nodes());
  EXPECT_EQ(back.edges(), m.edges());
  EXPECT_EQ(back.merge_radius(), 2);
  EXPECT_EQ(back.to_string(), text);
}

TEST(MapFormat, RejectsGarbage) {
  EXPECT_THROW(TopoMap::from_string("topomap v2 0 0 1 1\n"), Error);
  EXPECT_THROW(TopoMap::from_string("topomap v1 1 0 1 1\nnode 0 1 1 0 zz\n"), Error);
}
