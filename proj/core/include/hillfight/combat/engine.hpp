#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hillfight/combat/world.hpp"

namespace hf::combat {

/// Basic actions occupy indices 0..6; attacks on opposing units follow,
/// then attacks on neutral buildings.
enum BasicAction : int {
  kNorth = 0,  // +y
  kSouth = 1,  // -y
  kEast = 2,   // +x
  kWest = 3,   // -x
  kNoop = 4,
  kStop = 5,
  kSkill = 6,
};
inline constexpr std::size_t kBasicActionCount = 7;

std::size_t action_space_size(std::size_t n_targets, std::size_t n_buildings);
/// Action-space size of an allied agent.
std::size_t action_space_size(const WorldState& world);

Vec2 move_direction(int action);

/// Legal-action mask (1 = legal) for any living or dead unit, indexed in
/// that unit's own action space (targets = the opposing team).
std::vector<std::uint8_t> legal_actions(const WorldState& world, std::size_t unit_id);

struct Event {
  enum class Kind : std::uint8_t { Hit, Miss, Kill, BuildingDestroyed, SiegeToggle };
  Kind kind = Kind::Hit;
  std::size_t source = 0;
  bool target_is_building = false;
  std::size_t target = 0;
  double damage = 0.0;  // health actually removed
};

std::string_view to_string(Event::Kind kind);

struct StepResult {
  std::vector<Event> events;
  /// Actions every unit executed this tick, in unit order.
  std::vector<int> actions;
};

/// Advances the world one tick. Resolution order: skills, allied movement,
/// scripted enemy decisions and movement, attacks, deaths, tick increment.
/// Throws ContractViolation on any illegal agent action.
StepResult step(WorldState& world, std::span<const int> agent_actions);

/// Decisions of every enemy (index k -> action of enemy k) in enemy action space.
std::vector<int> scripted_enemy_policy(const WorldState& world);

enum class Outcome : std::uint8_t { Ongoing, Win, Loss, Timeout };
std::string_view to_string(Outcome outcome);

/// Loss if no ally lives (also on mutual annihilation), win if no enemy
/// lives, timeout once tick reaches the episode limit.
Outcome outcome(const WorldState& world);

}  // namespace hf::combat
