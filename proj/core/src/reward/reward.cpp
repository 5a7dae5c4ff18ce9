#include "hillfight/reward/reward.hpp"

#include <algorithm>
#include <vector>

namespace hf::reward {

double flawless_return(const combat::WorldState& world, const RewardConfig& config) {
  double health = 0.0;
  for (std::size_t k = 0; k < world.n_enemies(); ++k) {
    const auto& e = world.enemy(k);
    health += world.spec(e).max_health;
  }
  return config.damage_weight * health + config.kill_bonus * static_cast<double>(world.n_enemies()) + config.win_bonus;
}

double base_reward(std::span<const combat::Event> events, std::size_t n_allies, bool win, const RewardConfig& config,
                   double normalizer) {
  double dealt = 0.0, taken = 0.0;
  int kills = 0, deaths = 0;
  for (const auto& e : events) {
    if (e.target_is_building) continue;
    const bool target_is_ally = e.target < n_allies;
    if (e.kind == combat::Event::Kind::Hit) {
      (target_is_ally ? taken : dealt) += e.damage;
    } else if (e.kind == combat::Event::Kind::Kill) {
      ++(target_is_ally ? deaths : kills);
    }
  }
  double r = config.damage_weight * dealt + config.kill_bonus * kills + (win ? config.win_bonus : 0.0);
  if (!config.positive_only) r -= config.loss_weight * (config.damage_weight * taken + config.kill_bonus * deaths);
  if (config.normalize && normalizer > 0.0) r *= config.return_cap / normalizer;
  return r;
}

double alt_reward_raw(std::span<const combat::Vec2> agents_prev, std::span<const combat::Vec2> agents_cur,
                      std::span<const combat::Vec2> enemies_prev, std::span<const combat::Vec2> enemies_cur) {
  auto potential = [](std::span<const combat::Vec2> agents, std::span<const combat::Vec2> enemies) {
    if (enemies.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& a : agents) {
      for (const auto& e : enemies) sum += combat::distance(a, e);
    }
    return sum / static_cast<double>(enemies.size());
  };
  return potential(agents_prev, enemies_prev) - potential(agents_cur, enemies_cur);
}

double alt_reward_scale(const combat::WorldState& world) {
  double step = 0.0;
  for (std::size_t i = 0; i < world.n_allies; ++i) step = std::max(step, world.catalog.get(world.units[i].archetype).move_step);
  return static_cast<double>(world.n_allies) * step;
}

double alt_reward(const combat::WorldState& prev, const combat::WorldState& cur) {
  std::vector<combat::Vec2> ap, ac, ep, ec;
  for (std::size_t i = 0; i < cur.n_allies; ++i) {
    if (!cur.units[i].alive) continue;
    ap.push_back(prev.units[i].pos);
    ac.push_back(cur.units[i].pos);
  }
  for (std::size_t k = 0; k < cur.n_enemies(); ++k) {
    if (prev.enemy(k).alive) ep.push_back(prev.enemy(k).pos);
    if (cur.enemy(k).alive) ec.push_back(cur.enemy(k).pos);
  }
  const double scale = alt_reward_scale(cur);
  return scale > 0.0 ? alt_reward_raw(ap, ac, ep, ec) / scale : 0.0;
}

double schedule_reward(double base, double alt, std::int64_t global_step, const RewardConfig& config) {
  switch (config.schedule) {
    case AltSchedule::None: return base;
    case AltSchedule::Switch: return global_step < config.switch_at ? alt : base;
    case AltSchedule::Blend: return config.alt_weight * alt + config.base_weight * base;
  }
  return base;
}

}  // namespace hf::reward
