#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hillfight/combat/world.hpp"

namespace hf::scenario {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `count` units of one archetype laid out in a row: unit c stands at (x + c, y).
struct SpawnGroup {
  combat::Archetype archetype = combat::Archetype::Marine;
  double x = 0.0;
  double y = 0.0;
  int count = 1;
  bool sieged = false;
  friend bool operator==(const SpawnGroup&, const SpawnGroup&) = default;
};

struct BuildingSpec {
  combat::BuildingKind kind = combat::BuildingKind::Tree;
  combat::CellRect footprint;
  double health = 100.0;
  friend bool operator==(const BuildingSpec&, const BuildingSpec&) = default;
};

enum class ScenarioKind : std::uint8_t { Defensive, Offensive, Smoke };
enum class Formation : std::uint8_t { Spread, Gathered };
enum class Approach : std::uint8_t { None, OneSided, TwoSided };
enum class DistanceClass : std::uint8_t { None, Near, Distant, Complicated };

struct Scenario {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<combat::CellRect> plateaus;
  std::vector<combat::CellRect> impassable;
  std::vector<BuildingSpec> buildings;
  std::vector<SpawnGroup> allies;
  std::vector<SpawnGroup> enemies;

  combat::EnemyMode mode = combat::EnemyMode::Hold;
  Formation formation = Formation::Spread;
  Approach approach = Approach::None;
  std::vector<std::vector<combat::Vec2>> lanes;

  ScenarioKind kind = ScenarioKind::Smoke;
  int supply_difference = 0;
  DistanceClass distance_class = DistanceClass::None;
  int episode_limit = 200;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses the sectioned `key = value` text format. Unknown sections or keys
/// and malformed values raise ScenarioError naming the line.
Scenario parse_scenario(std::string_view text);

/// Canonical text: fixed section/key order, one entry per line.
std::string serialize(const Scenario& scenario);

/// Names of the scenarios compiled into the library, sorted.
std::vector<std::string> builtin_names();
bool is_builtin(std::string_view name);

/// A built-in name, or else a path to a scenario file. Throws ScenarioError
/// when the result does not validate.
Scenario load_scenario(std::string_view name_or_path);

/// Human-readable invariant violations; empty when the scenario is sound.
std::vector<std::string> validate(const Scenario& scenario);

/// Unit counts per archetype (sieged tanks count as siege tanks).
std::map<combat::Archetype, int> roster_counts(const std::vector<SpawnGroup>& roster);
int roster_supply(const std::vector<SpawnGroup>& roster, const combat::UnitCatalog& catalog = combat::UnitCatalog::defaults());
std::size_t roster_size(const std::vector<SpawnGroup>& roster);

/// Fresh world at tick 0 with the scenario's terrain, buildings, units and
/// enemy behaviour; `seed` drives the world's hit rolls.
combat::WorldState instantiate(const Scenario& scenario, std::uint64_t seed,
                               const combat::UnitCatalog& catalog = combat::UnitCatalog::defaults());

std::string_view to_string(ScenarioKind kind);
std::string_view to_string(Formation formation);
std::string_view to_string(Approach approach);
std::string_view to_string(DistanceClass distance_class);

}  // namespace hf::scenario
