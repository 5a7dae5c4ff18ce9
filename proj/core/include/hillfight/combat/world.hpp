#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "hillfight/combat/units.hpp"

namespace hf::combat {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(Cell, Cell) = default;
};

inline Cell cell_of(Vec2 p) { return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))}; }
inline Vec2 cell_center(Cell c) { return {c.x + 0.5, c.y + 0.5}; }

/// Axis-aligned rectangle of cells [x, x + w) x [y, y + h).
struct CellRect {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  bool contains(Cell c) const { return c.x >= x && c.x < x + w && c.y >= y && c.y < y + h; }
  friend bool operator==(const CellRect&, const CellRect&) = default;
};

class TerrainGrid {
 public:
  TerrainGrid() = default;
  TerrainGrid(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool in_bounds(Cell c) const noexcept { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  /// 0 = plain, 1 = hill. Out-of-bounds cells read as plain.
  int elevation(Cell c) const noexcept;
  int elevation(Vec2 p) const noexcept { return elevation(cell_of(p)); }
  bool passable(Cell c) const noexcept;

  void set_elevation(CellRect rect, int level);
  void set_impassable(CellRect rect);
  void set_passable(Cell c, bool passable);

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> elevation_;
  std::vector<std::uint8_t> passable_;
};

struct Building {
  std::size_t id = 0;
  BuildingKind kind = BuildingKind::Tree;
  CellRect footprint;
  double health = 0.0;
  double max_health = 0.0;
  bool blocks_sight = true;
  bool alive = true;

  Vec2 center() const { return {footprint.x + footprint.w / 2.0, footprint.y + footprint.h / 2.0}; }
};

enum class Team : std::uint8_t { Ally, Enemy };

struct UnitState {
  std::size_t id = 0;
  Team team = Team::Ally;
  Archetype archetype = Archetype::Marine;
  Vec2 pos;
  double health = 0.0;
  int cooldown_remaining = 0;
  bool sieged = false;
  bool alive = true;
  int last_action = 5;  // kStop
  // Scripted-enemy lane bookkeeping.
  std::size_t lane = 0;
  std::size_t waypoint = 0;
};

enum class EnemyMode : std::uint8_t { Approach, Hold };

struct EnemyBehavior {
  EnemyMode mode = EnemyMode::Hold;
  /// Lane waypoints for approach mode; enemy j follows lane j mod lanes.size().
  std::vector<std::vector<Vec2>> lanes;
};

/// Thrown when a caller submits an action the engine would not allow.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Deterministic 64-bit generator carried inside the world.
class WorldRng {
 public:
  explicit WorldRng(std::uint64_t seed = 0) : engine_(seed) {}
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }
  friend bool operator==(const WorldRng&, const WorldRng&) = default;

 private:
  std::mt19937_64 engine_;
};

struct WorldState {
  TerrainGrid terrain;
  /// Allies occupy ids [0, n_allies), enemies follow.
  std::vector<UnitState> units;
  std::vector<Building> buildings;
  std::size_t n_allies = 0;
  int tick = 0;
  int episode_limit = 200;
  WorldRng rng;
  UnitCatalog catalog = UnitCatalog::defaults();
  EnemyBehavior behavior;

  std::size_t n_enemies() const noexcept { return units.size() - n_allies; }
  UnitState& ally(std::size_t i) { return units.at(i); }
  const UnitState& ally(std::size_t i) const { return units.at(i); }
  UnitState& enemy(std::size_t k) { return units.at(n_allies + k); }
  const UnitState& enemy(std::size_t k) const { return units.at(n_allies + k); }
  const UnitSpec& spec(const UnitState& u) const { return catalog.get(u.archetype, u.sieged); }
};

/// Straight segment between two points avoids every living sight-blocking
/// building. `ignore_building` (if < buildings.size()) is exempt, so a
/// building never hides itself.
bool line_of_sight(const WorldState& world, Vec2 from, Vec2 to, std::size_t ignore_building = SIZE_MAX);

/// True when `cell` is in bounds, passable terrain and not under a living building.
bool cell_walkable(const WorldState& world, Cell cell);

}  // namespace hf::combat
