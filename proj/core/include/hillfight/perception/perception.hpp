#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hillfight/combat/world.hpp"

namespace hf::perception {

/// Rows: agents. Columns: agents, then enemies, then neutral buildings.
class VisibilityMatrix {
 public:
  VisibilityMatrix() = default;
  VisibilityMatrix(std::size_t n_agents, std::size_t n_enemies, std::size_t n_buildings);

  std::size_t rows() const noexcept { return n_agents_; }
  std::size_t cols() const noexcept { return n_agents_ + n_enemies_ + n_buildings_; }
  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t n_enemies() const noexcept { return n_enemies_; }
  std::size_t n_buildings() const noexcept { return n_buildings_; }

  std::uint8_t operator()(std::size_t i, std::size_t j) const { return cells_[i * cols() + j]; }
  std::uint8_t& operator()(std::size_t i, std::size_t j) { return cells_[i * cols() + j]; }

  std::size_t enemy_col(std::size_t k) const noexcept { return n_agents_ + k; }
  std::size_t building_col(std::size_t m) const noexcept { return n_agents_ + n_enemies_ + m; }

  friend bool operator==(const VisibilityMatrix&, const VisibilityMatrix&) = default;

 private:
  std::size_t n_agents_ = 0;
  std::size_t n_enemies_ = 0;
  std::size_t n_buildings_ = 0;
  std::vector<std::uint8_t> cells_;
};

enum class CommMode : std::uint8_t {
  Closure,     // OR-merge repeated to a fixpoint over the in-range graph
  SinglePass,  // each agent merges only its direct neighbours' original rows
};

enum class StateMode : std::uint8_t { Concat, Smac };

struct PerceptionConfig {
  bool communicate = true;  // obs_communicate_info
  bool broadcast = false;   // obs_broadcast_info: no range limit
  CommMode comm_mode = CommMode::Closure;
  StateMode state_mode = StateMode::Concat;
};

inline constexpr double kCommRangeSiegeTank = 16.0;
inline constexpr double kCommRangeDefault = 12.0;
double comm_range(combat::Archetype archetype);

/// Raw sight: (i, j) = 1 iff agent i lives, entity j lives, the distance is
/// within i's sight range and no living sight-blocking building intersects
/// the segment. Buildings are measured at their centre.
VisibilityMatrix visibility(const combat::WorldState& world);

/// Shares rows between living agents within min(comm_range(i), comm_range(j))
/// (any distance when broadcasting). Identity when both flags are off.
VisibilityMatrix communicate(const VisibilityMatrix& vis, const combat::WorldState& world,
                             const PerceptionConfig& config = {});

/// visibility() followed by communicate().
VisibilityMatrix shared_visibility(const combat::WorldState& world, const PerceptionConfig& config = {});

// Closed-form feature widths.
inline constexpr std::size_t kMoveFeatures = 4 + 8;
inline constexpr std::size_t kOwnFeatures = 4 + combat::kEntityTypeCount;
inline constexpr std::size_t kEntityFeatures = 14;
std::size_t last_action_width(std::size_t n_enemies, std::size_t n_buildings);
std::size_t ally_block_width(std::size_t n_enemies, std::size_t n_buildings);
std::size_t observation_size(std::size_t n_agents, std::size_t n_enemies, std::size_t n_buildings);
std::size_t smac_state_size(std::size_t n_agents, std::size_t n_enemies);
std::size_t state_size(std::size_t n_agents, std::size_t n_enemies, std::size_t n_buildings, StateMode mode);

/// Observation of one agent given the (possibly communication-extended) visibility.
/// Layout: Move | Own | other allies in id order | enemies | buildings.
std::vector<double> observe(const combat::WorldState& world, const VisibilityMatrix& vis, std::size_t agent);

std::vector<std::vector<double>> observe_all(const combat::WorldState& world, const VisibilityMatrix& vis);

/// Concat mode: observations joined in agent order. Smac mode: per-ally
/// {health, cooldown, rel x, rel y, type, last action} and per-enemy
/// {health, rel x, rel y, type}, positions relative to the map centre.
std::vector<double> global_state(const combat::WorldState& world, const std::vector<std::vector<double>>& observations,
                                 StateMode mode = StateMode::Concat);

/// Engine legality further restricted to targets present in the agent's
/// visibility row: an agent can only shoot what it (or a communicating
/// ally) sees.
std::vector<std::uint8_t> available_actions(const combat::WorldState& world, const VisibilityMatrix& vis,
                                            std::size_t agent);

/// Maps an action of the extended space onto the 6 + n_enemies SMAC layout
/// {no-op, stop, N, S, E, W, attack...}; skills and building attacks read as stop.
std::size_t smac_action_index(int action, std::size_t n_enemies);

}  // namespace hf::perception
