#pragma once

// Macro-action execution: graph shortest paths over the topological map,
// grid steering between waypoints, and the per-step bookkeeping that feeds
// detections, explored flags and traversal edges back into the map.

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "rng.hpp"
#include "simenv.hpp"
#include "topomap.hpp"

namespace topomacro {

/// Minimum-cost node sequence from `from` to `to`; among equal-cost paths the
/// lexicographically smallest id sequence.
inline std::vector<NodeId> shortest_path(const TopoMap& map, NodeId from, NodeId to) {
  if (!map.contains(from) || !map.contains(to))
    throw Error(ErrorKind::UnknownNode, "shortest_path endpoint missing");
  if (from == to) return {from};

  // Distances to `to`; greedy smallest-id descent then yields the
  // lexicographically smallest shortest path.
  constexpr long kInf = std::numeric_limits<long>::max();
  std::vector<long> dist(map.size(), kInf);
  using Item = std::pair<long, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<std::size_t>(to)] = 0;
  queue.push({0, to});
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d != dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& [v, cost] : map.neighbors(u)) {
      const long nd = d + cost;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        queue.push({nd, v});
      }
    }
  }
  if (dist[static_cast<std::size_t>(from)] == kInf)
    throw Error(ErrorKind::Unreachable, "no path " + std::to_string(from) + " -> " + std::to_string(to));

  std::vector<NodeId> path{from};
  for (NodeId u = from; u != to;) {
    for (const auto& [v, cost] : map.neighbors(u)) {  // ascending id
      if (dist[static_cast<std::size_t>(v)] != kInf &&
          dist[static_cast<std::size_t>(v)] + cost == dist[static_cast<std::size_t>(u)]) {
        u = v;
        break;
      }
    }
    path.push_back(u);
  }
  return path;
}

inline long path_cost(const TopoMap& map, const std::vector<NodeId>& path) {
  long total = 0;
  for (std::size_t i = 1; i < path.size(); ++i) total += map.edge_cost(path[i - 1], path[i]).value();
  return total;
}

struct PlannerConfig {
  SensorConfig sensor;
  int goal_radius = 1;
  int hop_budget = 0;    // 0: 4*(w+h)
  int macro_budget = 0;  // 0: 4*(w+h)
  bool arrival_scan = true;

  int resolved_hop_budget(const GridScene& s) const { return hop_budget > 0 ? hop_budget : 4 * (s.width + s.height); }
  int resolved_macro_budget(const GridScene& s) const {
    return macro_budget > 0 ? macro_budget : 4 * (s.width + s.height);
  }
};

struct MacroAction {
  NodeId target = 0;
};

struct MacroOutcome {
  AgentPose end_pose;
  int elementary_steps = 0;
  bool reached = false;
  double reward = 0.0;
  TaskProgress progress;
  bool done = false;
  std::vector<NodeId> new_node_ids;
};

struct SteerResult {
  AgentPose pose;
  int steps = 0;
  bool reached = false;
};

struct TraceEvent {
  long step = 0;
  AgentPose pose;
  std::string event;
};

/// Agent-side knowledge of the grid: cells visited this episode and wall
/// cells sensed next to them. Unknown cells are planned through as free.
class GridKnowledge {
 public:
  GridKnowledge() = default;
  GridKnowledge(int width, int height) : visited_(width, height, false), walls_(width, height, false) {}

  void sense(const GridScene& scene, Cell at) {
    visited_.set(at, true);
    for (int h = 0; h < 4; ++h) {
      const Cell n = at + heading_vector(static_cast<Heading>(h));
      if (walls_.in_bounds(n) && scene.is_wall(n)) walls_.set(n, true);
    }
  }

  bool visited(Cell c) const { return visited_.in_bounds(c) && visited_.get(c); }
  bool passable(Cell c) const { return walls_.in_bounds(c) && !walls_.get(c); }

  /// BFS distance (in moves) from every cell to the goal set
  /// {cells within `radius` of target}; -1 where unreachable.
  std::vector<int> distance_field(Cell target, int radius) const {
    std::vector<int> dist(walls_.size(), -1);
    std::deque<Cell> queue;
    for (int y = target.y - radius; y <= target.y + radius; ++y)
      for (int x = target.x - radius; x <= target.x + radius; ++x) {
        const Cell c{x, y};
        if (!passable(c)) continue;
        dist[walls_.index(c)] = 0;
        queue.push_back(c);
      }
    while (!queue.empty()) {
      const Cell c = queue.front();
      queue.pop_front();
      const int d = dist[walls_.index(c)];
      for (int h = 0; h < 4; ++h) {
        const Cell n = c + heading_vector(static_cast<Heading>(h));
        if (!passable(n) || dist[walls_.index(n)] >= 0) continue;
        dist[walls_.index(n)] = d + 1;
        queue.push_back(n);
      }
    }
    return dist;
  }

  std::size_t index(Cell c) const { return walls_.index(c); }

 private:
  CellGrid visited_;
  CellGrid walls_;
};

struct StepReport {
  double reward = 0.0;
  bool progress_changed = false;
  std::vector<NodeId> new_nodes;
};

/// Per-episode navigation state. Owns the pose, task progress, grid
/// knowledge and the traversal accounting that turns node-to-node movement
/// into map edges. Every elementary step runs
/// observe -> integrate_observation -> mark_explored -> edge accounting -> goal_update.
class Navigator {
 public:
  Navigator(const GridScene& scene, TopoMap& map, PlannerConfig cfg, RewardScheme scheme, bool record_trace = false)
      : scene_(&scene),
        map_(&map),
        cfg_(cfg),
        scheme_(scheme),
        knowledge_(scene.width, scene.height),
        pose_(scene.start),
        record_trace_(record_trace) {
    knowledge_.sense(scene, pose_.cell);
    log("start");
  }

  const GridScene& scene() const { return *scene_; }
  TopoMap& map() { return *map_; }
  const TopoMap& map() const { return *map_; }
  const PlannerConfig& config() const { return cfg_; }
  AgentPose pose() const { return pose_; }
  TaskProgress progress() const { return progress_; }
  bool done() const { return progress_.achieved >= scene_->n_targets; }
  long total_steps() const { return total_steps_; }
  double total_reward() const { return total_reward_; }
  const GridKnowledge& knowledge() const { return knowledge_; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  std::optional<NodeId> last_node() const { return last_node_; }

  StepReport step(ElementaryAction a) {
    StepReport report;
    pose_ = step_elementary(*scene_, pose_, a);
    ++total_steps_;
    knowledge_.sense(*scene_, pose_.cell);
    log(a == ElementaryAction::Forward ? "forward" : (a == ElementaryAction::TurnLeft ? "turn_left" : "turn_right"));

    const auto detections = observe(*scene_, pose_, cfg_.sensor, &noise_rng_);
    const auto before = static_cast<NodeId>(map_->size());
    const auto ids = map_->integrate_observation(detections);
    for (NodeId id : ids) {
      if (id >= before && std::find(report.new_nodes.begin(), report.new_nodes.end(), id) == report.new_nodes.end()) {
        report.new_nodes.push_back(id);
        log("detect " + std::to_string(id));
      }
    }
    for (NodeId id : map_->mark_explored(pose_.cell)) log("explored " + std::to_string(id));
    account_traversal();

    const auto gu = goal_update(*scene_, pose_, progress_, scheme_, cfg_.goal_radius);
    report.reward = gu.reward;
    report.progress_changed = gu.progress != progress_;
    progress_ = gu.progress;
    total_reward_ += gu.reward;
    if (report.progress_changed) log("subgoal " + std::to_string(progress_.achieved));
    return report;
  }

  /// Steers toward `target` until within `radius` (Chebyshev) or the budget
  /// runs out. `on_step` sees each step's report and returns true to stop.
  SteerResult steer(Cell target, int radius, int budget,
                    const std::function<bool(const StepReport&)>& on_step = {}) {
    SteerResult res{pose_, 0, false};
    auto take = [&](ElementaryAction a) {
      const auto report = step(a);
      ++res.steps;
      return on_step ? on_step(report) : false;
    };
    while (true) {
      if (chebyshev(pose_.cell, target) <= radius) {
        res.reached = true;
        break;
      }
      if (res.steps >= budget) break;
      const auto dist = knowledge_.distance_field(target, radius);
      const int here = dist[knowledge_.index(pose_.cell)];
      if (here <= 0) break;  // no known-feasible route
      // Prefer straight ahead, then left, then right, then behind.
      const Heading order[4] = {pose_.heading, turn_left(pose_.heading), turn_right(pose_.heading),
                                turn_left(turn_left(pose_.heading))};
      Heading want = pose_.heading;
      for (Heading h : order) {
        const Cell n = pose_.cell + heading_vector(h);
        if (knowledge_.passable(n) && dist[knowledge_.index(n)] == here - 1) {
          want = h;
          break;
        }
      }
      bool stop = false;
      if (want == turn_right(pose_.heading)) {
        stop = take(ElementaryAction::TurnRight);
      } else {
        while (!stop && pose_.heading != want && res.steps < budget) stop = take(ElementaryAction::TurnLeft);
      }
      if (!stop && pose_.heading == want && res.steps < budget) stop = take(ElementaryAction::Forward);
      if (stop) {
        res.reached = chebyshev(pose_.cell, target) <= radius;
        break;
      }
    }
    res.pose = pose_;
    return res;
  }

  /// Follows the graph path from the nearest node to the target node hop by
  /// hop; without a graph path, steers straight for the stored position.
  MacroOutcome execute_macro(MacroAction action) {
    MacroOutcome out;
    const long start_steps = total_steps_;
    const int macro_budget = cfg_.resolved_macro_budget(*scene_);
    const int hop_budget = cfg_.resolved_hop_budget(*scene_);
    const int radius = map_->explored_radius();
    bool stopped = false;
    auto on_step = [&](const StepReport& r) {
      out.reward += r.reward;
      out.new_node_ids.insert(out.new_node_ids.end(), r.new_nodes.begin(), r.new_nodes.end());
      stopped = r.progress_changed || done();
      return stopped;
    };
    auto used = [&] { return static_cast<int>(total_steps_ - start_steps); };

    if (map_->contains(action.target) && !done()) {
      log("macro " + std::to_string(action.target));
      std::vector<NodeId> waypoints;
      const NodeId anchor = map_->nearest_node(pose_.cell);
      try {
        waypoints = shortest_path(*map_, anchor, action.target);
        if (waypoints.size() > 1 && chebyshev(map_->node(waypoints.front()).position, pose_.cell) <= radius)
          waypoints.erase(waypoints.begin());
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Unreachable) throw;
        waypoints = {action.target};  // frontier mode
      }
      for (NodeId wp : waypoints) {
        const int budget = std::min(hop_budget, macro_budget - used());
        if (budget <= 0 && chebyshev(pose_.cell, map_->node(wp).position) > radius) break;
        const auto res = steer(map_->node(wp).position, radius, std::max(budget, 0), on_step);
        if (stopped || !res.reached) break;
      }
      out.reached = chebyshev(pose_.cell, map_->node(action.target).position) <= radius;
      // First arrival as a macro target: look around the remaining three headings.
      if (out.reached && !stopped && cfg_.arrival_scan && !scanned_.contains(action.target)) {
        scanned_.insert(action.target);
        for (int i = 0; i < 3 && !stopped && used() < macro_budget; ++i) on_step(step(ElementaryAction::TurnLeft));
      }
    }
    out.end_pose = pose_;
    out.elementary_steps = used();
    out.progress = progress_;
    out.done = done();
    return out;
  }

  /// Cold start: a 360-degree scan, then a seeded random walk of at most
  /// `walk_budget` steps until something is detected. Returns steps taken.
  int bootstrap(Rng& rng, int walk_budget, bool scan = true) {
    const long start = total_steps_;
    if (scan)
      for (int i = 0; i < 4 && !done(); ++i) step(ElementaryAction::TurnLeft);
    for (int i = 0; i < walk_budget && map_->empty() && !done(); ++i) {
      const bool blocked = !knowledge_.passable(pose_.cell + heading_vector(pose_.heading));
      const double u = rng.uniform();
      if (!blocked && u < 0.7) step(ElementaryAction::Forward);
      else if (u < 0.85) step(ElementaryAction::TurnLeft);
      else step(ElementaryAction::TurnRight);
    }
    return static_cast<int>(total_steps_ - start);
  }

 private:
  // The agent "is at" the nearest node within explored_radius (ties: smallest
  // id). Moving from being at node a to being at node b records an edge whose
  // cost is the number of steps since the agent was last at a.
  void account_traversal() {
    ++steps_since_last_;
    std::optional<NodeId> current;
    int best = map_->explored_radius() + 1;
    for (const auto& n : map_->nodes()) {
      const int d = chebyshev(n.position, pose_.cell);
      if (d < best) {
        best = d;
        current = n.id;
      }
    }
    if (!current) return;
    if (last_node_ && *last_node_ != *current) {
      if (map_->record_traversal(*last_node_, *current, steps_since_last_))
        log("edge " + std::to_string(*last_node_) + " " + std::to_string(*current) + " " +
            std::to_string(steps_since_last_));
    }
    last_node_ = current;
    steps_since_last_ = 0;
  }

  void log(std::string event) {
    if (record_trace_) trace_.push_back({total_steps_, pose_, std::move(event)});
  }

  const GridScene* scene_;
  TopoMap* map_;
  PlannerConfig cfg_;
  RewardScheme scheme_;
  GridKnowledge knowledge_;
  AgentPose pose_;
  TaskProgress progress_;
  long total_steps_ = 0;
  double total_reward_ = 0.0;
  std::optional<NodeId> last_node_;
  int steps_since_last_ = 0;
  Rng noise_rng_{0x0b5e};
  bool record_trace_ = false;
  std::vector<TraceEvent> trace_;
  std::set<NodeId> scanned_;
};

/// Standalone steering from `pose` with only the start cell known.
inline SteerResult steer_local(const GridScene& scene, AgentPose pose, Cell target_cell, int budget,
                               int radius = 1) {
  GridScene local = scene;
  local.start = pose;
  local.objects.clear();
  local.n_targets = 0;
  TopoMap scratch;
  Navigator nav(local, scratch, PlannerConfig{}, RewardScheme::Intermediate);
  return nav.steer(target_cell, radius, budget);
}

inline MacroOutcome execute_macro(Navigator& nav, MacroAction action) { return nav.execute_macro(action); }

inline void write_trace(std::ostream& os, const std::vector<TraceEvent>& trace) {
  os << "trace v1\n";
  for (const auto& e : trace)
    os << e.step << ' ' << e.pose.cell.x << ' ' << e.pose.cell.y << ' ' << heading_char(e.pose.heading) << ' '
       << e.event << '\n';
}

}  // namespace topomacro
