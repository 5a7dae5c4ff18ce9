#pragma once

#include <cstdint>
#include <span>

#include "hillfight/combat/engine.hpp"

namespace hf::reward {

enum class AltSchedule : std::uint8_t { None, Switch, Blend };

struct RewardConfig {
  double damage_weight = 1.0;
  double kill_bonus = 10.0;
  double win_bonus = 200.0;
  /// Scale so a flawless win (every enemy killed from full health) returns `return_cap`.
  bool normalize = true;
  double return_cap = 20.0;
  /// When false, damage and deaths suffered are charged at `loss_weight`.
  bool positive_only = true;
  double loss_weight = 0.5;

  AltSchedule schedule = AltSchedule::None;
  std::int64_t switch_at = 100000;  // alt on [0, switch_at), base afterwards
  double alt_weight = 0.2;
  double base_weight = 0.8;
};

/// Raw (unnormalized) return of a flawless win against the given world's enemies.
double flawless_return(const combat::WorldState& world, const RewardConfig& config);

/// Per-tick base reward from one step's event log. Events are classified
/// by unit id: ids below `n_allies` are agents. `normalizer` is the value
/// returned by flawless_return() (ignored unless config.normalize).
double base_reward(std::span<const combat::Event> events, std::size_t n_allies, bool win, const RewardConfig& config,
                   double normalizer);

/// Drop of the potential (1/|e|) sum_a sum_e d(a, e) from t-1 to t: positive
/// when agents close in. Each snapshot averages over its own enemy set, so an
/// enemy removed between ticks leaves the sum; an empty set has potential 0.
/// Agent spans are parallel (same agents at both ticks).
double alt_reward_raw(std::span<const combat::Vec2> agents_prev, std::span<const combat::Vec2> agents_cur,
                      std::span<const combat::Vec2> enemies_prev, std::span<const combat::Vec2> enemies_cur);

/// Largest single-tick value of alt_reward_raw: every agent moving its full
/// step straight at every enemy.
double alt_reward_scale(const combat::WorldState& world);

/// Normalized alternative reward between consecutive snapshots. Agents are
/// those alive in `cur` (a death is never paid); enemies are those alive in
/// each snapshot.
double alt_reward(const combat::WorldState& prev, const combat::WorldState& cur);

double schedule_reward(double base, double alt, std::int64_t global_step, const RewardConfig& config);

}  // namespace hf::reward
