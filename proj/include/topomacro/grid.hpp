#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

namespace topomacro {

struct Cell {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
  friend constexpr Cell operator+(Cell a, Cell b) { return {a.x + b.x, a.y + b.y}; }
};

constexpr int chebyshev(Cell a, Cell b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

constexpr int manhattan(Cell a, Cell b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

// y grows downward: North is (0,-1).
enum class Heading : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

constexpr Cell heading_vector(Heading h) {
  constexpr std::array<Cell, 4> v{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};
  return v[static_cast<int>(h)];
}

constexpr Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
constexpr Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }

constexpr char heading_char(Heading h) { return "NESW"[static_cast<int>(h)]; }

inline bool parse_heading(char c, Heading& out) {
  switch (c) {
    case 'N': out = Heading::N; return true;
    case 'E': out = Heading::E; return true;
    case 'S': out = Heading::S; return true;
    case 'W': out = Heading::W; return true;
    default: return false;
  }
}

struct AgentPose {
  Cell cell;
  Heading heading = Heading::N;

  friend constexpr bool operator==(const AgentPose&, const AgentPose&) = default;
};

/// Dense row-major boolean grid.
class CellGrid {
 public:
  CellGrid() = default;
  CellGrid(int width, int height, bool fill = false)
      : width_(width), height_(height), cells_(static_cast<std::size_t>(width * height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  bool get(Cell c) const { return cells_[index(c)] != 0; }
  void set(Cell c, bool v) { cells_[index(c)] = v ? 1 : 0; }

  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y * width_ + c.x); }
  Cell cell_at(std::size_t i) const {
    return {static_cast<int>(i % static_cast<std::size_t>(width_)),
            static_cast<int>(i / static_cast<std::size_t>(width_))};
  }

  std::size_t size() const { return cells_.size(); }

  friend bool operator==(const CellGrid&, const CellGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

}  // namespace topomacro

template <>
struct std::hash<topomacro::Cell> {
  std::size_t operator()(const topomacro::Cell& c) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
                                      static_cast<std::uint32_t>(c.y));
  }
};
