#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace topomacro;
using namespace testing_support;

namespace {

SceneConfig smoke(int n_targets = 1) {
  SceneConfig cfg;
  cfg.n_targets = n_targets;
  return cfg;
}

// Exact segment / closed-square test in doubled coordinates: cell centres sit
// on even integers and cell (x, y) covers [2x-1, 2x+1] x [2y-1, 2y+1].
bool segment_touches_cell(Cell a, Cell b, Cell c) {
  const long ax = 2L * a.x, ay = 2L * a.y, bx = 2L * b.x, by = 2L * b.y;
  const long lo_x = 2L * c.x - 1, hi_x = 2L * c.x + 1, lo_y = 2L * c.y - 1, hi_y = 2L * c.y + 1;
  if (std::max(ax, bx) < lo_x || std::min(ax, bx) > hi_x) return false;
  if (std::max(ay, by) < lo_y || std::min(ay, by) > hi_y) return false;
  int pos = 0, neg = 0;
  for (long cx : {lo_x, hi_x})
    for (long cy : {lo_y, hi_y}) {
      const long cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
      if (cross > 0) ++pos;
      if (cross < 0) ++neg;
    }
  return !(pos == 4 || neg == 4);
}

bool oracle_visible(const GridScene& s, AgentPose pose, Cell target, int range) {
  const int dx = target.x - pose.cell.x, dy = target.y - pose.cell.y;
  if (std::max(std::abs(dx), std::abs(dy)) > range) return false;
  if (dx != 0 || dy != 0) {
    const Cell h = heading_vector(pose.heading);
    const long dot = static_cast<long>(dx) * h.x + static_cast<long>(dy) * h.y;
    // angle <= 45 degrees  <=>  dot >= 0 and 2 dot^2 >= |v|^2
    if (dot < 0 || 2 * dot * dot < static_cast<long>(dx) * dx + static_cast<long>(dy) * dy) return false;
  }
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const Cell c{x, y};
      if (c == pose.cell || c == target || !s.walls.get(c)) continue;
      if (segment_touches_cell(pose.cell, target, c)) return false;
    }
  return true;
}

}  // namespace

TEST(GenerateScene, ObjectAndRankCounts) {
  const auto scene = generate_scene(7, smoke());
  EXPECT_EQ(scene.objects.size(), 8u);
  const auto ranked = std::count_if(scene.objects.begin(), scene.objects.end(),
                                    [](const SceneObject& o) { return o.target_rank.has_value(); });
  EXPECT_EQ(ranked, 1);
  EXPECT_EQ(scene.target(1).target_rank, 1);
}

TEST(GenerateScene, SameSeedIsByteIdentical) {
  EXPECT_EQ(scene_to_string(generate_scene(7, smoke())), scene_to_string(generate_scene(7, smoke())));
  EXPECT_NE(scene_to_string(generate_scene(7, smoke())), scene_to_string(generate_scene(8, smoke())));
}

TEST(GenerateScene, EveryTargetReachableForHundredSeeds) {
  const auto cfg = smoke(3);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto scene = generate_scene(seed, cfg);
    ASSERT_FALSE(scene.walls.get(scene.start.cell)) << "seed " << seed;
    const auto dist = bfs_distances(scene, scene.start.cell);
    for (int rank = 1; rank <= 3; ++rank) {
      const Cell t = scene.target(rank).cell;
      EXPECT_GE(dist[static_cast<std::size_t>(t.y * scene.width + t.x)], 0) << "seed " << seed << " rank " << rank;
    }
  }
}

TEST(GenerateScene, ObjectsOnDistinctFreeCells) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto scene = generate_scene(seed, smoke(2));
    std::set<Cell> cells;
    for (const auto& o : scene.objects) {
      EXPECT_FALSE(scene.walls.get(o.cell));
      EXPECT_TRUE(cells.insert(o.cell).second);
      EXPECT_EQ(o.appearance.size(), 4);
      for (double v : o.appearance.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(GenerateScene, RejectsInvalidConfig) {
  SceneConfig cfg;
  cfg.n_targets = 4;
  EXPECT_THROW(generate_scene(0, cfg), Error);
  cfg = SceneConfig{};
  cfg.width = 5;
  EXPECT_THROW(generate_scene(0, cfg), Error);
}

TEST(GenerateScene, TooDenseFailsWithGenerationFailed) {
  SceneConfig cfg;
  cfg.width = 8;
  cfg.height = 8;
  cfg.n_objects = 40;
  cfg.max_retries = 5;
  try {
    generate_scene(0, cfg);
    FAIL() << "expected GenerationFailed";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GenerationFailed);
  }
}

TEST(StepElementary, ForwardTurnsAndBlocking) {
  auto scene = open_room(6, 6, {{2, 2}, Heading::N});
  auto p = step_elementary(scene, {{2, 2}, Heading::N}, ElementaryAction::Forward);
  EXPECT_EQ(p.cell, (Cell{2, 1}));
  EXPECT_EQ(p.heading, Heading::N);

  AgentPose q{{2, 2}, Heading::N};
  q = step_elementary(scene, q, ElementaryAction::TurnLeft);
  EXPECT_EQ(q.heading, Heading::W);
  for (int i = 0; i < 3; ++i) q = step_elementary(scene, q, ElementaryAction::TurnLeft);
  EXPECT_EQ(q.heading, Heading::N);
  EXPECT_EQ(step_elementary(scene, q, ElementaryAction::TurnRight).heading, Heading::E);

  const AgentPose at_wall{{2, 1}, Heading::N};
  EXPECT_EQ(step_elementary(scene, at_wall, ElementaryAction::Forward).cell, at_wall.cell);
}

TEST(Observe, ObjectAheadInOpenCorridor) {
  auto scene = open_room(12, 12, {{5, 8}, Heading::N});
  add_object(scene, {5, 5}, 1);
  const auto dets = observe(scene, scene.start, SensorConfig{});
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].distance, 3);
  EXPECT_EQ(dets[0].position, (Cell{5, 5}));
  EXPECT_EQ(dets[0].appearance, scene.objects[0].appearance);
}

TEST(Observe, WallOnRayOccludes) {
  auto scene = open_room(12, 12, {{5, 8}, Heading::N});
  add_object(scene, {5, 5}, 1);
  scene.walls.set({5, 6}, true);
  EXPECT_TRUE(observe(scene, scene.start, SensorConfig{}).empty());
}

TEST(Observe, BehindOrOutOfRangeIsInvisible) {
  auto scene = open_room(24, 24, {{5, 10}, Heading::N});
  add_object(scene, {5, 12}, std::nullopt);      // behind
  add_object(scene, {5, 1}, std::nullopt, 0.2);  // 9 cells ahead
  add_object(scene, {9, 7}, 1, 0.8);             // outside 45 degrees
  EXPECT_TRUE(observe(scene, scene.start, SensorConfig{}).empty());
}

TEST(Observe, MatchesBruteForceOracle) {
  Rng rng(42);
  int visible = 0, checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    GridScene scene;
    if (trial % 2 == 0) {
      scene = generate_scene(static_cast<std::uint64_t>(trial), smoke());
    } else {
      // Random clutter stresses the ray cast, including exact corner crossings.
      scene = open_room(16, 16, {{8, 8}, Heading::N});
      for (int y = 1; y < 15; ++y)
        for (int x = 1; x < 15; ++x)
          if (rng.uniform() < 0.15) scene.walls.set({x, y}, true);
      for (int k = 0; k < 12; ++k) add_object(scene, {rng.range(1, 14), rng.range(1, 14)}, std::nullopt);
    }
    std::vector<Cell> free;
    for (int y = 0; y < scene.height; ++y)
      for (int x = 0; x < scene.width; ++x)
        if (!scene.walls.get({x, y})) free.push_back({x, y});
    for (int k = 0; k < 5; ++k) {
      const AgentPose pose{free[rng.below(free.size())], static_cast<Heading>(rng.below(4))};
      const auto dets = observe(scene, pose, SensorConfig{});
      std::vector<Cell> expected;
      for (const auto& o : scene.objects)
        if (oracle_visible(scene, pose, o.cell, 8)) expected.push_back(o.cell);
      std::vector<Cell> got;
      for (const auto& d : dets) {
        got.push_back(d.position);
        EXPECT_EQ(d.distance, chebyshev(pose.cell, d.position));
      }
      ASSERT_EQ(got, expected) << "trial " << trial << " pose " << pose.cell.x << "," << pose.cell.y;
      visible += static_cast<int>(got.size());
      checked += static_cast<int>(scene.objects.size());
    }
  }
  EXPECT_GT(visible, 100);
  EXPECT_LT(visible, checked);
}

TEST(Observe, SupercoverIncludesBothCornerCells) {
  const auto line = supercover_line({0, 0}, {2, 2});
  const std::set<Cell> cells(line.begin(), line.end());
  for (Cell c : {Cell{0, 0}, Cell{1, 0}, Cell{0, 1}, Cell{1, 1}, Cell{2, 1}, Cell{1, 2}, Cell{2, 2}})
    EXPECT_TRUE(cells.contains(c)) << c.x << "," << c.y;
  EXPECT_EQ(cells.size(), 7u);
}

namespace {

GridScene three_target_scene() {
  auto scene = open_room(14, 6, {{1, 2}, Heading::E}, 3);
  add_object(scene, {4, 2}, 1, 0.1);
  add_object(scene, {8, 2}, 2, 0.5);
  add_object(scene, {12, 2}, 3, 0.9);
  return scene;
}

std::vector<double> walk_rewards(const GridScene& scene, RewardScheme scheme, bool* done) {
  TaskProgress progress;
  std::vector<double> rewards;
  AgentPose pose = scene.start;
  *done = false;
  while (pose.cell.x < scene.width - 2 && !*done) {
    pose = step_elementary(scene, pose, ElementaryAction::Forward);
    const auto gu = goal_update(scene, pose, progress, scheme);
    EXPECT_GE(gu.progress.achieved, progress.achieved);
    if (gu.progress != progress) rewards.push_back(gu.reward);
    progress = gu.progress;
    *done = gu.done;
  }
  return rewards;
}

}  // namespace

TEST(GoalUpdate, IntermediatePaysEachSubgoal) {
  bool done = false;
  const auto rewards = walk_rewards(three_target_scene(), RewardScheme::Intermediate, &done);
  EXPECT_TRUE(done);
  EXPECT_EQ(rewards, (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(GoalUpdate, TerminalPaysOnlyAtTheEnd) {
  bool done = false;
  const auto rewards = walk_rewards(three_target_scene(), RewardScheme::Terminal, &done);
  EXPECT_TRUE(done);
  EXPECT_EQ(rewards, (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(GoalUpdate, LaterTargetEarlyPaysNothing) {
  const auto scene = three_target_scene();
  const auto gu = goal_update(scene, {{8, 2}, Heading::E}, TaskProgress{0}, RewardScheme::Intermediate);
  EXPECT_EQ(gu.reward, 0.0);
  EXPECT_EQ(gu.progress.achieved, 0);
  EXPECT_FALSE(gu.done);
}

TEST(GoalUpdate, DiagonalAdjacencyCounts) {
  const auto scene = three_target_scene();
  const auto gu = goal_update(scene, {{3, 1}, Heading::E}, TaskProgress{0}, RewardScheme::Intermediate);
  EXPECT_EQ(gu.progress.achieved, 1);
  EXPECT_EQ(gu.reward, 1.0);
}

TEST(SceneFormat, RoundTripIsExact) {
  const auto scene = generate_scene(3, smoke(2));
  const auto text = scene_to_string(scene);
  EXPECT_EQ(text.rfind("scene v1 20 20 2\n", 0), 0u);
  std::istringstream in(text);
  const auto back = read_scene(in);
  EXPECT_EQ(back, scene);
  EXPECT_EQ(scene_to_string(back), text);
}

TEST(SceneFormat, MalformedInputIsParseError) {
  std::istringstream in("scene v1 4 4 1\nbogus 1 2\n");
  try {
    read_scene(in);
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  }
}
