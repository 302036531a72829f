#pragma once

// Deterministic 2-D grid navigation environment: procedural room layouts,
// colored objects, ray-cast detections and sequential-goal rewards.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "patch.hpp"
#include "rng.hpp"

namespace topomacro {

struct SceneConfig {
  int width = 20;
  int height = 20;
  int n_objects = 8;
  int n_targets = 1;
  int patch_size = 4;
  double obstacle_density = 0.03;
  int door_width = 3;
  int discoverable_range = 8;  // 0 disables the discoverability check
  bool hide_targets_from_start = false;  // no target within discoverable_range and line of sight of the start
  double target_jitter = 0.02;
  int min_object_spacing = 2;  // Chebyshev distance between any two objects
  int max_retries = 1000;
};

struct SensorConfig {
  double fov_halfwidth_deg = 45.0;
  int range = 8;
  double position_noise = 0.0;  // stddev in cells; zero means ground truth
};

enum class RewardScheme { Intermediate, Terminal };

enum class ElementaryAction { Forward, TurnLeft, TurnRight };

struct SceneObject {
  Cell cell;
  AppearancePatch appearance;
  std::optional<int> target_rank;  // 1-based; empty for distractors

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct GridScene {
  int width = 0;
  int height = 0;
  CellGrid walls;
  std::vector<SceneObject> objects;
  AgentPose start;
  int n_targets = 1;

  bool is_wall(Cell c) const { return !walls.in_bounds(c) || walls.get(c); }

  const SceneObject& target(int rank) const {
    for (const auto& o : objects)
      if (o.target_rank == rank) return o;
    throw Error(ErrorKind::ParseError, "scene has no target of rank " + std::to_string(rank));
  }

  friend bool operator==(const GridScene&, const GridScene&) = default;
};

struct Detection {
  Cell position;
  AppearancePatch appearance;
  int distance = 0;
};

struct TaskProgress {
  int achieved = 0;
  friend constexpr bool operator==(const TaskProgress&, const TaskProgress&) = default;
};

struct GoalUpdate {
  double reward = 0.0;
  TaskProgress progress;
  bool done = false;
};

// Reserved saturated colors for target ranks 1..3.
inline constexpr std::array<std::array<double, 3>, 3> kTargetColors{{
    {0.95, 0.05, 0.05},
    {0.05, 0.95, 0.05},
    {0.05, 0.05, 0.95},
}};

// Distractor base colors are rejected inside this Euclidean ball around any target color.
inline constexpr double kTargetColorExclusion = 0.4;

namespace detail {

inline AppearancePatch make_patch(int size, const std::array<double, 3>& base, double jitter, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(size * size * 3));
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = std::clamp(base[i % 3] + jitter * rng.normal(), 0.0, 1.0);
  return AppearancePatch(size, std::move(v));
}

inline std::array<double, 3> distractor_color(Rng& rng) {
  for (;;) {
    std::array<double, 3> c{rng.uniform(), rng.uniform(), rng.uniform()};
    bool ok = true;
    for (const auto& t : kTargetColors) {
      const double d2 = (c[0] - t[0]) * (c[0] - t[0]) + (c[1] - t[1]) * (c[1] - t[1]) + (c[2] - t[2]) * (c[2] - t[2]);
      if (d2 < kTargetColorExclusion * kTargetColorExclusion) ok = false;
    }
    if (ok) return c;
  }
}

/// Cells 4-connected to `from` through non-wall cells.
inline CellGrid reachable_from(const GridScene& scene, Cell from) {
  CellGrid seen(scene.width, scene.height, false);
  if (scene.is_wall(from)) return seen;
  std::deque<Cell> queue{from};
  seen.set(from, true);
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (int h = 0; h < 4; ++h) {
      const Cell n = c + heading_vector(static_cast<Heading>(h));
      if (!scene.is_wall(n) && !seen.get(n)) {
        seen.set(n, true);
        queue.push_back(n);
      }
    }
  }
  return seen;
}

inline void validate_config(const SceneConfig& cfg) {
  if (cfg.width < 8 || cfg.height < 8) throw Error(ErrorKind::GenerationFailed, "scene must be at least 8x8");
  if (cfg.n_targets < 1 || cfg.n_targets > 3) throw Error(ErrorKind::GenerationFailed, "n_targets must be 1..3");
  if (cfg.n_objects < cfg.n_targets) throw Error(ErrorKind::GenerationFailed, "n_objects < n_targets");
  if (cfg.patch_size < 1) throw Error(ErrorKind::GenerationFailed, "patch_size must be positive");
}

}  // namespace detail

/// Walls and start pose only: boundary walls, one vertical and one horizontal
/// partition with doorways (four rooms), and scattered pillar cells.
inline GridScene generate_layout(std::uint64_t seed, const SceneConfig& cfg) {
  detail::validate_config(cfg);
  Rng rng(mix_seed(seed, 0x1a70));
  GridScene scene;
  scene.width = cfg.width;
  scene.height = cfg.height;
  scene.n_targets = cfg.n_targets;
  scene.walls = CellGrid(cfg.width, cfg.height, false);
  const int w = cfg.width, h = cfg.height;
  for (int x = 0; x < w; ++x) {
    scene.walls.set({x, 0}, true);
    scene.walls.set({x, h - 1}, true);
  }
  for (int y = 0; y < h; ++y) {
    scene.walls.set({0, y}, true);
    scene.walls.set({w - 1, y}, true);
  }

  const int vx = rng.range(w / 3, (2 * w) / 3);
  const int hy = rng.range(h / 3, (2 * h) / 3);
  for (int y = 1; y < h - 1; ++y) scene.walls.set({vx, y}, true);
  for (int x = 1; x < w - 1; ++x) scene.walls.set({x, hy}, true);

  // Doorways are door_width cells wide, one per partition segment.
  const int dw = std::max(1, std::min({cfg.door_width, hy - 1, h - 2 - hy, vx - 1, w - 2 - vx}));
  std::vector<Cell> door_starts{
      {vx, rng.range(1, hy - dw)},
      {vx, rng.range(hy + 1, h - 1 - dw)},
      {rng.range(1, vx - dw), hy},
      {rng.range(vx + 1, w - 1 - dw), hy},
  };
  // Dropping one doorway keeps the four rooms connected (a path instead of a cycle).
  if (rng.uniform() < 0.5) door_starts.erase(door_starts.begin() + static_cast<std::ptrdiff_t>(rng.below(4)));
  std::vector<Cell> doors;
  for (Cell d : door_starts)
    for (int k = 0; k < dw; ++k) doors.push_back(d.x == vx ? Cell{vx, d.y + k} : Cell{d.x + k, hy});
  for (Cell d : doors) scene.walls.set(d, false);

  auto near_door = [&](Cell c) {
    return std::any_of(doors.begin(), doors.end(), [&](Cell d) { return chebyshev(c, d) <= 1; });
  };
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      const Cell c{x, y};
      if (scene.walls.get(c) || near_door(c)) continue;
      if (rng.uniform() < cfg.obstacle_density) scene.walls.set(c, true);
    }

  std::vector<Cell> free;
  for (std::size_t i = 0; i < scene.walls.size(); ++i)
    if (!scene.walls.get(scene.walls.cell_at(i))) free.push_back(scene.walls.cell_at(i));
  scene.start.cell = free[rng.below(free.size())];
  scene.start.heading = static_cast<Heading>(rng.below(4));
  return scene;
}

inline bool line_of_sight(const GridScene& scene, Cell from, Cell to);

/// True when every target can be found by hopping between objects. The
/// start cell reveals every object in range with line of sight (any
/// heading); a discovered object reveals what is visible from all free cells
/// within `arrival_radius` of it, since the agent may stop at any of them.
inline bool targets_discoverable(const GridScene& scene, int sensor_range, int arrival_radius = 1) {
  auto visible = [&](Cell from, Cell to) { return chebyshev(from, to) <= sensor_range && line_of_sight(scene, from, to); };
  std::vector<bool> found(scene.objects.size(), false);
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    if (visible(scene.start.cell, scene.objects[i].cell)) {
      found[i] = true;
      frontier.push_back(i);
    }
  while (!frontier.empty()) {
    const Cell at = scene.objects[frontier.back()].cell;
    frontier.pop_back();
    for (std::size_t j = 0; j < scene.objects.size(); ++j) {
      if (found[j]) continue;
      bool seen = true;
      for (int dy = -arrival_radius; dy <= arrival_radius && seen; ++dy)
        for (int dx = -arrival_radius; dx <= arrival_radius && seen; ++dx) {
          const Cell c{at.x + dx, at.y + dy};
          if (!scene.is_wall(c) && !visible(c, scene.objects[j].cell)) seen = false;
        }
      if (seen) {
        found[j] = true;
        frontier.push_back(j);
      }
    }
  }
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    if (scene.objects[i].target_rank && !found[i]) return false;
  return true;
}

/// Re-draws object cells in `scene` keeping appearances and ranks. Objects go
/// on cells reachable from the start, at least two cells from the start and
/// `min_object_spacing` from each other, with every target discoverable
/// (see targets_discoverable) when cfg.discoverable_range > 0.
inline void place_objects(GridScene& scene, std::uint64_t placement_seed, const SceneConfig& cfg) {
  Rng rng(mix_seed(placement_seed, 0x91ace));
  const CellGrid reach = detail::reachable_from(scene, scene.start.cell);
  std::vector<Cell> candidates;
  for (std::size_t i = 0; i < reach.size(); ++i) {
    const Cell c = reach.cell_at(i);
    if (reach.get(c) && chebyshev(c, scene.start.cell) > 1) candidates.push_back(c);
  }
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    std::vector<Cell> chosen;
    std::vector<Cell> pool = candidates;
    while (chosen.size() < scene.objects.size() && !pool.empty()) {
      const auto k = rng.below(pool.size());
      const Cell c = pool[k];
      pool[k] = pool.back();
      pool.pop_back();
      const bool spaced = std::all_of(chosen.begin(), chosen.end(),
                                      [&](Cell o) { return chebyshev(o, c) >= cfg.min_object_spacing; });
      if (spaced) chosen.push_back(c);
    }
    if (chosen.size() != scene.objects.size()) continue;
    GridScene trial = scene;
    for (std::size_t i = 0; i < chosen.size(); ++i) trial.objects[i].cell = chosen[i];
    if (cfg.discoverable_range > 0 && !targets_discoverable(trial, cfg.discoverable_range)) continue;
    if (cfg.hide_targets_from_start && cfg.discoverable_range > 0 &&
        std::any_of(trial.objects.begin(), trial.objects.end(), [&](const SceneObject& o) {
          return o.target_rank && chebyshev(o.cell, trial.start.cell) <= cfg.discoverable_range &&
                 line_of_sight(trial, trial.start.cell, o.cell);
        }))
      continue;
    scene.objects = std::move(trial.objects);
    return;
  }
  throw Error(ErrorKind::GenerationFailed, "could not place " + std::to_string(scene.objects.size()) +
                                               " reachable objects after " + std::to_string(cfg.max_retries) +
                                               " retries");
}

inline GridScene generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
  GridScene scene = generate_layout(seed, cfg);
  Rng rng(mix_seed(seed, 0xc0105));
  for (int i = 0; i < cfg.n_objects; ++i) {
    SceneObject obj;
    if (i < cfg.n_targets) {
      obj.target_rank = i + 1;
      obj.appearance = detail::make_patch(cfg.patch_size, kTargetColors[static_cast<std::size_t>(i)], cfg.target_jitter, rng);
    } else {
      obj.appearance = detail::make_patch(cfg.patch_size, detail::distractor_color(rng), cfg.target_jitter, rng);
    }
    scene.objects.push_back(std::move(obj));
  }
  // Shuffle so targets are not always the first objects listed.
  for (std::size_t i = scene.objects.size(); i > 1; --i) std::swap(scene.objects[i - 1], scene.objects[rng.below(i)]);
  place_objects(scene, mix_seed(seed, 0x5eed), cfg);
  return scene;
}

inline AgentPose step_elementary(const GridScene& scene, AgentPose pose, ElementaryAction a) {
  switch (a) {
    case ElementaryAction::TurnLeft: pose.heading = turn_left(pose.heading); break;
    case ElementaryAction::TurnRight: pose.heading = turn_right(pose.heading); break;
    case ElementaryAction::Forward: {
      const Cell next = pose.cell + heading_vector(pose.heading);
      if (!scene.is_wall(next)) pose.cell = next;
      break;
    }
  }
  return pose;
}

/// Supercover line between cell centers: every cell the segment touches,
/// including both side cells when it passes exactly through a corner.
inline std::vector<Cell> supercover_line(Cell from, Cell to) {
  const int dx = to.x - from.x, dy = to.y - from.y;
  const int nx = std::abs(dx), ny = std::abs(dy);
  const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
  std::vector<Cell> cells{from};
  Cell p = from;
  for (int ix = 0, iy = 0; ix < nx || iy < ny;) {
    const long decision = static_cast<long>(1 + 2 * ix) * ny - static_cast<long>(1 + 2 * iy) * nx;
    if (decision == 0) {
      cells.push_back({p.x + sx, p.y});
      cells.push_back({p.x, p.y + sy});
      p.x += sx;
      p.y += sy;
      ++ix;
      ++iy;
    } else if (decision < 0) {
      p.x += sx;
      ++ix;
    } else {
      p.y += sy;
      ++iy;
    }
    cells.push_back(p);
  }
  return cells;
}

inline bool line_of_sight(const GridScene& scene, Cell from, Cell to) {
  const auto cells = supercover_line(from, to);
  for (std::size_t i = 1; i + 1 < cells.size(); ++i)
    if (scene.is_wall(cells[i])) return false;
  return true;
}

inline bool in_field_of_view(AgentPose pose, Cell target, double fov_halfwidth_deg) {
  if (target == pose.cell) return true;
  const Cell h = heading_vector(pose.heading);
  const double vx = target.x - pose.cell.x, vy = target.y - pose.cell.y;
  const double cosang = (vx * h.x + vy * h.y) / std::hypot(vx, vy);
  const double angle = std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / std::numbers::pi;
  return angle <= fov_halfwidth_deg + 1e-9;
}

/// Every object within range (Chebyshev), inside the heading-centered field
/// of view and with unobstructed line of sight. `noise_rng` is only consulted
/// when cfg.position_noise > 0.
inline std::vector<Detection> observe(const GridScene& scene, AgentPose pose, const SensorConfig& cfg,
                                      Rng* noise_rng = nullptr) {
  std::vector<Detection> out;
  for (const auto& obj : scene.objects) {
    const int d = chebyshev(pose.cell, obj.cell);
    if (d > cfg.range) continue;
    if (!in_field_of_view(pose, obj.cell, cfg.fov_halfwidth_deg)) continue;
    if (!line_of_sight(scene, pose.cell, obj.cell)) continue;
    Detection det{obj.cell, obj.appearance, d};
    if (cfg.position_noise > 0.0 && noise_rng != nullptr) {
      det.position.x = std::clamp(det.position.x + static_cast<int>(std::lround(cfg.position_noise * noise_rng->normal())),
                                  0, scene.width - 1);
      det.position.y = std::clamp(det.position.y + static_cast<int>(std::lround(cfg.position_noise * noise_rng->normal())),
                                  0, scene.height - 1);
    }
    out.push_back(std::move(det));
  }
  return out;
}

/// Advances progress when the agent stands within goal_radius of the next
/// target in order. Later-ranked targets reached early pay nothing.
inline GoalUpdate goal_update(const GridScene& scene, AgentPose pose, TaskProgress progress, RewardScheme scheme,
                              int goal_radius = 1) {
  GoalUpdate out{0.0, progress, progress.achieved >= scene.n_targets};
  if (out.done) return out;
  const SceneObject& next = scene.target(progress.achieved + 1);
  if (chebyshev(pose.cell, next.cell) > goal_radius) return out;
  out.progress.achieved += 1;
  out.done = out.progress.achieved == scene.n_targets;
  if (scheme == RewardScheme::Intermediate || out.done) out.reward = 1.0;
  return out;
}

// ---- plain-text scene format -------------------------------------------------

inline void write_scene(std::ostream& os, const GridScene& scene) {
  os << "scene v1 " << scene.width << ' ' << scene.height << ' ' << scene.n_targets << '\n';
  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x)
      if (scene.walls.get({x, y})) os << "wall " << x << ' ' << y << '\n';
  for (const auto& o : scene.objects) {
    os << "obj " << o.cell.x << ' ' << o.cell.y << ' ';
    if (o.target_rank) os << *o.target_rank;
    else os << '-';
    os << ' ' << o.appearance.size() << ' ' << encode_hex(o.appearance.values()) << '\n';
  }
  os << "start " << scene.start.cell.x << ' ' << scene.start.cell.y << ' ' << heading_char(scene.start.heading)
     << '\n';
}

inline std::string scene_to_string(const GridScene& scene) {
  std::ostringstream os;
  write_scene(os, scene);
  return os.str();
}

inline GridScene read_scene(std::istream& is) {
  auto fail = [](const std::string& msg) { return Error(ErrorKind::ParseError, "scene: " + msg); };
  std::string line;
  if (!std::getline(is, line)) throw fail("missing header");
  std::istringstream header(line);
  std::string magic, version;
  GridScene scene;
  if (!(header >> magic >> version >> scene.width >> scene.height >> scene.n_targets) || magic != "scene" ||
      version != "v1")
    throw fail("bad header '" + line + "'");
  if (scene.width <= 0 || scene.height <= 0) throw fail("bad dimensions");
  scene.walls = CellGrid(scene.width, scene.height, false);
  bool have_start = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "wall") {
      Cell c;
      if (!(ls >> c.x >> c.y) || !scene.walls.in_bounds(c)) throw fail("bad wall line '" + line + "'");
      scene.walls.set(c, true);
    } else if (tag == "obj") {
      SceneObject o;
      std::string rank, hex;
      int p = 0;
      if (!(ls >> o.cell.x >> o.cell.y >> rank >> p >> hex)) throw fail("bad obj line '" + line + "'");
      if (rank != "-") o.target_rank = std::stoi(rank);
      o.appearance = AppearancePatch(p, decode_hex(hex));
      scene.objects.push_back(std::move(o));
    } else if (tag == "start") {
      char hc = 0;
      if (!(ls >> scene.start.cell.x >> scene.start.cell.y >> hc) || !parse_heading(hc, scene.start.heading))
        throw fail("bad start line '" + line + "'");
      have_start = true;
    } else {
      throw fail("unknown record '" + tag + "'");
    }
  }
  if (!have_start) throw fail("missing start line");
  return scene;
}

}  // namespace topomacro
