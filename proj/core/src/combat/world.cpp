#include "hillfight/combat/world.hpp"

#include <algorithm>

namespace hf::combat {

TerrainGrid::TerrainGrid(int width, int height)
    : width_(width),
      height_(height),
      elevation_(static_cast<std::size_t>(width) * height, 0),
      passable_(static_cast<std::size_t>(width) * height, 1) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("terrain extents must be positive");
}

int TerrainGrid::elevation(Cell c) const noexcept { return in_bounds(c) ? elevation_[index(c)] : 0; }

bool TerrainGrid::passable(Cell c) const noexcept { return in_bounds(c) && passable_[index(c)] != 0; }

void TerrainGrid::set_elevation(CellRect rect, int level) {
  if (level != 0 && level != 1) throw std::invalid_argument("elevation must be 0 or 1");
  for (int y = rect.y; y < rect.y + rect.h; ++y) {
    for (int x = rect.x; x < rect.x + rect.w; ++x) {
      if (in_bounds({x, y})) elevation_[index({x, y})] = static_cast<std::uint8_t>(level);
    }
  }
}

void TerrainGrid::set_impassable(CellRect rect) {
  for (int y = rect.y; y < rect.y + rect.h; ++y) {
    for (int x = rect.x; x < rect.x + rect.w; ++x) {
      if (in_bounds({x, y})) passable_[index({x, y})] = 0;
    }
  }
}

void TerrainGrid::set_passable(Cell c, bool passable) {
  if (in_bounds(c)) passable_[index(c)] = passable ? 1 : 0;
}

namespace {

// Liang-Barsky clip of segment a->b against the rectangle; true if any part
// of the segment lies strictly inside.
bool segment_hits_rect(Vec2 a, Vec2 b, const CellRect& r) {
  constexpr double kShrink = 1e-9;
  const double xmin = r.x + kShrink, xmax = r.x + r.w - kShrink;
  const double ymin = r.y + kShrink, ymax = r.y + r.h - kShrink;
  const double dx = b.x - a.x, dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - xmin, xmax - a.x, a.y - ymin, ymax - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

bool line_of_sight(const WorldState& world, Vec2 from, Vec2 to, std::size_t ignore_building) {
  for (const auto& b : world.buildings) {
    if (!b.alive || !b.blocks_sight || b.id == ignore_building) continue;
    if (segment_hits_rect(from, to, b.footprint)) return false;
  }
  return true;
}

bool cell_walkable(const WorldState& world, Cell cell) {
  if (!world.terrain.passable(cell)) return false;
  for (const auto& b : world.buildings) {
    if (b.alive && b.footprint.contains(cell)) return false;
  }
  return true;
}

}  // namespace hf::combat
