#pragma once

// Topological map of detected objects: nodes carry position, appearance
// and an explored flag; edges record realized traversals with step costs.

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "patch.hpp"
#include "simenv.hpp"

namespace topomacro {

using NodeId = int;

struct MapNode {
  NodeId id = 0;
  Cell position;
  AppearancePatch appearance;
  bool explored = false;

  friend bool operator==(const MapNode&, const MapNode&) = default;
};

struct MapEdge {
  NodeId a = 0;
  NodeId b = 0;
  int cost = 0;

  friend bool operator==(const MapEdge&, const MapEdge&) = default;
};

class TopoMap {
 public:
  explicit TopoMap(int merge_radius = 1, int explored_radius = 1)
      : merge_radius_(merge_radius), explored_radius_(explored_radius) {}

  int merge_radius() const { return merge_radius_; }
  int explored_radius() const { return explored_radius_; }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<MapNode>& nodes() const { return nodes_; }
  const MapNode& node(NodeId id) const {
    require(id);
    return nodes_[static_cast<std::size_t>(id)];
  }
  bool contains(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size(); }

  /// Node nearest to `cell` among those within merge_radius (ties: smallest id).
  std::optional<NodeId> match(Cell cell) const {
    std::optional<NodeId> best;
    int best_d = merge_radius_ + 1;
    for (const auto& n : nodes_) {
      const int d = chebyshev(n.position, cell);
      if (d < best_d) {
        best_d = d;
        best = n.id;
      }
    }
    return best;
  }

  /// Returns the node id for each detection in order, creating unexplored
  /// nodes for detections that match nothing within merge_radius.
  std::vector<NodeId> integrate_observation(std::span<const Detection> detections) {
    std::vector<NodeId> ids;
    ids.reserve(detections.size());
    for (const auto& det : detections) {
      if (auto hit = match(det.position)) {
        ids.push_back(*hit);
        continue;
      }
      const auto id = static_cast<NodeId>(nodes_.size());
      nodes_.push_back(MapNode{id, det.position, det.appearance, false});
      adjacency_.emplace_back();
      ids.push_back(id);
    }
    return ids;
  }

  /// Flags every node within explored_radius of `cell`; returns newly flipped ids.
  std::vector<NodeId> mark_explored(Cell cell) {
    std::vector<NodeId> flipped;
    for (auto& n : nodes_) {
      if (!n.explored && chebyshev(n.position, cell) <= explored_radius_) {
        n.explored = true;
        flipped.push_back(n.id);
      }
    }
    return flipped;
  }

  /// Adds or shortens the undirected edge (from, to). Returns whether the
  /// adjacency changed.
  bool record_traversal(NodeId from, NodeId to, int steps) {
    if (from == to) throw Error(ErrorKind::SelfEdge, "self edge on node " + std::to_string(from));
    require(from);
    require(to);
    if (steps <= 0) throw Error(ErrorKind::InvalidArgument, "traversal steps must be positive");
    auto& fwd = adjacency_[static_cast<std::size_t>(from)];
    auto it = fwd.find(to);
    if (it != fwd.end() && it->second <= steps) return false;
    fwd[to] = steps;
    adjacency_[static_cast<std::size_t>(to)][from] = steps;
    return true;
  }

  std::optional<int> edge_cost(NodeId a, NodeId b) const {
    require(a);
    require(b);
    const auto& adj = adjacency_[static_cast<std::size_t>(a)];
    if (auto it = adj.find(b); it != adj.end()) return it->second;
    return std::nullopt;
  }

  const std::map<NodeId, int>& neighbors(NodeId id) const {
    require(id);
    return adjacency_[static_cast<std::size_t>(id)];
  }

  /// All edges with a < b, ordered by (a, b).
  std::vector<MapEdge> edges() const {
    std::vector<MapEdge> out;
    for (std::size_t a = 0; a < adjacency_.size(); ++a)
      for (const auto& [b, cost] : adjacency_[a])
        if (static_cast<NodeId>(a) < b) out.push_back({static_cast<NodeId>(a), b, cost});
    return out;
  }

  NodeId nearest_node(Cell cell) const {
    if (nodes_.empty()) throw Error(ErrorKind::EmptyMap, "nearest_node on empty map");
    NodeId best = 0;
    int best_d = chebyshev(nodes_[0].position, cell);
    for (const auto& n : nodes_) {
      const int d = chebyshev(n.position, cell);
      if (d < best_d) {
        best_d = d;
        best = n.id;
      }
    }
    return best;
  }

  std::set<NodeId> unexplored_ids() const {
    std::set<NodeId> out;
    for (const auto& n : nodes_)
      if (!n.explored) out.insert(n.id);
    return out;
  }

  friend bool operator==(const TopoMap&, const TopoMap&) = default;

  // ---- plain-text dump format ----------------------------------------------

  void write(std::ostream& os) const {
    const auto all_edges = edges();
    os << "topomap v1 " << nodes_.size() << ' ' << all_edges.size() << ' ' << merge_radius_ << ' '
       << explored_radius_ << '\n';
    for (const auto& n : nodes_)
      os << "node " << n.id << ' ' << n.position.x << ' ' << n.position.y << ' ' << (n.explored ? 1 : 0) << ' '
         << encode_hex(n.appearance.values()) << '\n';
    for (const auto& e : all_edges) os << "edge " << e.a << ' ' << e.b << ' ' << e.cost << '\n';
  }

  std::string to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  static TopoMap read(std::istream& is) {
    auto fail = [](const std::string& msg) { return Error(ErrorKind::ParseError, "topomap: " + msg); };
    std::string line, magic, version;
    std::size_t n_nodes = 0, n_edges = 0;
    int merge = 0, explored = 0;
    if (!std::getline(is, line)) throw fail("missing header");
    std::istringstream header(line);
    if (!(header >> magic >> version >> n_nodes >> n_edges >> merge >> explored) || magic != "topomap" ||
        version != "v1")
      throw fail("bad header '" + line + "'");
    TopoMap map(merge, explored);
    for (std::size_t i = 0; i < n_nodes; ++i) {
      if (!std::getline(is, line)) throw fail("truncated node list");
      std::istringstream ls(line);
      std::string tag, hex;
      MapNode n;
      int flag = 0;
      if (!(ls >> tag >> n.id >> n.position.x >> n.position.y >> flag >> hex) || tag != "node" ||
          n.id != static_cast<NodeId>(i))
        throw fail("bad node line '" + line + "'");
      n.explored = flag != 0;
      n.appearance = decode_patch(hex);
      map.nodes_.push_back(std::move(n));
      map.adjacency_.emplace_back();
    }
    for (std::size_t i = 0; i < n_edges; ++i) {
      if (!std::getline(is, line)) throw fail("truncated edge list");
      std::istringstream ls(line);
      std::string tag;
      MapEdge e;
      if (!(ls >> tag >> e.a >> e.b >> e.cost) || tag != "edge" || !map.contains(e.a) || !map.contains(e.b))
        throw fail("bad edge line '" + line + "'");
      map.record_traversal(e.a, e.b, e.cost);
    }
    return map;
  }

  static TopoMap from_string(const std::string& text) {
    std::istringstream is(text);
    return read(is);
  }

 private:
  void require(NodeId id) const {
    if (!contains(id)) throw Error(ErrorKind::UnknownNode, "no node " + std::to_string(id));
  }

  int merge_radius_;
  int explored_radius_;
  std::vector<MapNode> nodes_;
  std::vector<std::map<NodeId, int>> adjacency_;
};

}  // namespace topomacro
