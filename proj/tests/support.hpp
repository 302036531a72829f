#pragma once

#include <deque>
#include <vector>

#include <topomacro/topomacro.hpp>

namespace testing_support {

using namespace topomacro;

/// Open room: boundary walls only.
inline GridScene open_room(int w, int h, AgentPose start, int n_targets = 1) {
  GridScene s;
  s.width = w;
  s.height = h;
  s.walls = CellGrid(w, h, false);
  for (int x = 0; x < w; ++x) {
    s.walls.set({x, 0}, true);
    s.walls.set({x, h - 1}, true);
  }
  for (int y = 0; y < h; ++y) {
    s.walls.set({0, y}, true);
    s.walls.set({w - 1, y}, true);
  }
  s.start = start;
  s.n_targets = n_targets;
  return s;
}

inline AppearancePatch solid_patch(int size, double r, double g, double b) {
  std::vector<double> v;
  for (int i = 0; i < size * size; ++i) v.insert(v.end(), {r, g, b});
  return AppearancePatch(size, std::move(v));
}

inline void add_object(GridScene& s, Cell c, std::optional<int> rank, double shade = 0.5, int patch = 4) {
  s.objects.push_back({c, solid_patch(patch, shade, 1.0 - shade, 0.25), rank});
}

/// Plain 4-neighbour BFS over non-wall cells; -1 when unreachable.
inline std::vector<int> bfs_distances(const GridScene& s, Cell from) {
  std::vector<int> dist(static_cast<std::size_t>(s.width * s.height), -1);
  auto at = [&](Cell c) -> int& { return dist[static_cast<std::size_t>(c.y * s.width + c.x)]; };
  std::deque<Cell> q{from};
  at(from) = 0;
  const Cell dirs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    for (Cell d : dirs) {
      const Cell n{c.x + d.x, c.y + d.y};
      if (n.x < 0 || n.y < 0 || n.x >= s.width || n.y >= s.height || s.walls.get(n) || at(n) >= 0) continue;
      at(n) = at(c) + 1;
      q.push_back(n);
    }
  }
  return dist;
}

}  // namespace testing_support
