#include "hillfight/combat/engine.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace hf::combat {

std::size_t action_space_size(std::size_t n_targets, std::size_t n_buildings) {
  return kBasicActionCount + n_targets + n_buildings;
}

std::size_t action_space_size(const WorldState& world) {
  return action_space_size(world.n_enemies(), world.buildings.size());
}

Vec2 move_direction(int action) {
  switch (action) {
    case kNorth: return {0.0, 1.0};
    case kSouth: return {0.0, -1.0};
    case kEast: return {1.0, 0.0};
    case kWest: return {-1.0, 0.0};
    default: return {0.0, 0.0};
  }
}

std::string_view to_string(Event::Kind kind) {
  switch (kind) {
    case Event::Kind::Hit: return "hit";
    case Event::Kind::Miss: return "miss";
    case Event::Kind::Kill: return "kill";
    case Event::Kind::BuildingDestroyed: return "building_destroyed";
    case Event::Kind::SiegeToggle: return "siege_toggle";
  }
  return "?";
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Ongoing: return "ongoing";
    case Outcome::Win: return "win";
    case Outcome::Loss: return "loss";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

namespace {

struct TargetRange {
  std::size_t first = 0;  // first opposing unit id
  std::size_t count = 0;
};

TargetRange opponents(const WorldState& world, const UnitState& u) {
  return u.team == Team::Ally ? TargetRange{world.n_allies, world.n_enemies()} : TargetRange{0, world.n_allies};
}

std::size_t own_action_count(const WorldState& world, const UnitState& u) {
  return action_space_size(opponents(world, u).count, world.buildings.size());
}

bool occupied_by_other(const WorldState& world, Cell cell, std::size_t self) {
  for (const auto& other : world.units) {
    if (other.alive && other.id != self && cell_of(other.pos) == cell) return true;
  }
  return false;
}

bool can_step(const WorldState& world, const UnitState& u, int action) {
  const UnitSpec& spec = world.spec(u);
  if (u.sieged || spec.move_step <= 0.0) return false;
  const Vec2 dest = u.pos + move_direction(action) * spec.move_step;
  return cell_walkable(world, cell_of(dest));
}

void try_move(WorldState& world, UnitState& u, int action) {
  if (!can_step(world, u, action)) return;
  const Vec2 dest = u.pos + move_direction(action) * world.spec(u).move_step;
  const Cell c = cell_of(dest);
  if (c != cell_of(u.pos) && occupied_by_other(world, c, u.id)) return;
  u.pos = dest;
}

bool sees(const WorldState& world, const UnitState& viewer, const UnitState& target) {
  return target.alive && distance(viewer.pos, target.pos) <= world.spec(viewer).sight_range &&
         line_of_sight(world, viewer.pos, target.pos);
}

int step_toward(const WorldState& world, const UnitState& u, Vec2 goal) {
  const Vec2 d = goal - u.pos;
  const int horizontal = d.x >= 0 ? kEast : kWest;
  const int vertical = d.y >= 0 ? kNorth : kSouth;
  int order[2] = {horizontal, vertical};
  if (std::fabs(d.y) > std::fabs(d.x)) std::swap(order[0], order[1]);
  for (int a : order) {
    if ((a == horizontal && std::fabs(d.x) < 1e-9) || (a == vertical && std::fabs(d.y) < 1e-9)) continue;
    if (!can_step(world, u, a)) continue;
    const Vec2 dest = u.pos + move_direction(a) * world.spec(u).move_step;
    const Cell c = cell_of(dest);
    if (c != cell_of(u.pos) && occupied_by_other(world, c, u.id)) continue;
    return a;
  }
  return kStop;
}

}  // namespace

std::vector<std::uint8_t> legal_actions(const WorldState& world, std::size_t unit_id) {
  const UnitState& u = world.units.at(unit_id);
  std::vector<std::uint8_t> mask(own_action_count(world, u), 0);
  if (!u.alive) {
    mask[kNoop] = 1;
    return mask;
  }
  for (int a : {kNorth, kSouth, kEast, kWest}) mask[a] = can_step(world, u, a) ? 1 : 0;
  mask[kStop] = 1;
  mask[kSkill] = 1;
  const UnitSpec& spec = world.spec(u);
  const TargetRange opp = opponents(world, u);
  for (std::size_t k = 0; k < opp.count; ++k) {
    const UnitState& t = world.units[opp.first + k];
    mask[kBasicActionCount + k] = t.alive && distance(u.pos, t.pos) <= spec.shooting_range ? 1 : 0;
  }
  for (std::size_t m = 0; m < world.buildings.size(); ++m) {
    const Building& b = world.buildings[m];
    mask[kBasicActionCount + opp.count + m] =
        b.alive && distance(u.pos, b.center()) <= spec.shooting_range ? 1 : 0;
  }
  return mask;
}

std::vector<int> scripted_enemy_policy(const WorldState& world) {
  std::vector<int> actions(world.n_enemies(), kStop);
  for (std::size_t k = 0; k < world.n_enemies(); ++k) {
    const UnitState& e = world.enemy(k);
    if (!e.alive) {
      actions[k] = kNoop;
      continue;
    }
    // Nearest visible ally, ties to the lowest id.
    std::size_t best = SIZE_MAX;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < world.n_allies; ++i) {
      const UnitState& a = world.ally(i);
      if (!sees(world, e, a)) continue;
      const double d = distance(e.pos, a.pos);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best != SIZE_MAX) {
      if (best_d <= world.spec(e).shooting_range) {
        actions[k] = static_cast<int>(kBasicActionCount + best);
        continue;
      }
      actions[k] = step_toward(world, e, world.ally(best).pos);
      if (actions[k] != kStop) continue;
      // Direct chase blocked (cliff, building, crowd): keep following the lane.
    }
    if (world.behavior.mode == EnemyMode::Approach && !world.behavior.lanes.empty()) {
      const auto& lane = world.behavior.lanes[e.lane % world.behavior.lanes.size()];
      std::size_t wp = e.waypoint;
      while (wp < lane.size() && distance(e.pos, lane[wp]) < 1.0) ++wp;
      if (wp < lane.size()) actions[k] = step_toward(world, e, lane[wp]);
    }
  }
  return actions;
}

StepResult step(WorldState& world, std::span<const int> agent_actions) {
  if (agent_actions.size() != world.n_allies) {
    throw ContractViolation("expected " + std::to_string(world.n_allies) + " agent actions, got " +
                            std::to_string(agent_actions.size()));
  }
  for (std::size_t i = 0; i < world.n_allies; ++i) {
    const auto mask = legal_actions(world, i);
    const int a = agent_actions[i];
    if (a < 0 || static_cast<std::size_t>(a) >= mask.size() || mask[a] == 0) {
      throw ContractViolation("illegal action " + std::to_string(a) + " for agent " + std::to_string(i) + " at tick " +
                              std::to_string(world.tick));
    }
  }

  StepResult result;
  result.actions.assign(world.units.size(), kNoop);
  for (std::size_t i = 0; i < world.n_allies; ++i) result.actions[i] = agent_actions[i];

  // (1) skills
  for (std::size_t i = 0; i < world.n_allies; ++i) {
    UnitState& u = world.units[i];
    if (u.alive && result.actions[i] == kSkill && u.archetype == Archetype::SiegeTank) {
      u.sieged = !u.sieged;
      result.events.push_back({Event::Kind::SiegeToggle, u.id, false, u.id, 0.0});
    }
  }
  // (2) allied movement
  for (std::size_t i = 0; i < world.n_allies; ++i) {
    UnitState& u = world.units[i];
    if (u.alive && result.actions[i] <= kWest) try_move(world, u, result.actions[i]);
  }
  // (3) scripted enemies decide on the post-movement world, then move
  const std::vector<int> enemy_actions = scripted_enemy_policy(world);
  for (std::size_t k = 0; k < enemy_actions.size(); ++k) {
    UnitState& e = world.enemy(k);
    result.actions[world.n_allies + k] = enemy_actions[k];
    if (!e.alive) continue;
    if (enemy_actions[k] <= kWest) try_move(world, e, enemy_actions[k]);
    if (world.behavior.mode == EnemyMode::Approach && !world.behavior.lanes.empty()) {
      const auto& lane = world.behavior.lanes[e.lane % world.behavior.lanes.size()];
      while (e.waypoint < lane.size() && distance(e.pos, lane[e.waypoint]) < 1.0) ++e.waypoint;
    }
  }
  // (4) attacks
  for (auto& u : world.units) {
    const int a = result.actions[u.id];
    if (!u.alive || a < static_cast<int>(kBasicActionCount) || u.cooldown_remaining > 0) continue;
    const UnitSpec& spec = world.spec(u);
    const TargetRange opp = opponents(world, u);
    const std::size_t slot = static_cast<std::size_t>(a) - kBasicActionCount;
    if (slot < opp.count) {
      UnitState& target = world.units[opp.first + slot];
      if (!target.alive || distance(u.pos, target.pos) > spec.shooting_range) continue;
      u.cooldown_remaining = spec.cooldown_ticks;
      const double p = hit_probability(world.terrain.elevation(u.pos), world.terrain.elevation(target.pos));
      const bool hit = p >= 1.0 || world.rng.uniform() < p;
      if (!hit) {
        result.events.push_back({Event::Kind::Miss, u.id, false, target.id, 0.0});
        continue;
      }
      auto apply = [&](UnitState& victim) {
        const double dealt = std::min(victim.health, damage(spec, world.spec(victim).attributes));
        victim.health -= dealt;
        result.events.push_back({Event::Kind::Hit, u.id, false, victim.id, dealt});
      };
      apply(target);
      if (u.sieged && spec.splash_radius > 0.0) {
        const Vec2 centre = target.pos;
        for (std::size_t j = 0; j < opp.count; ++j) {
          UnitState& v = world.units[opp.first + j];
          if (v.id == target.id || !v.alive) continue;
          if (distance(v.pos, centre) <= spec.splash_radius) apply(v);
        }
      }
    } else {
      Building& b = world.buildings.at(slot - opp.count);
      if (!b.alive || distance(u.pos, b.center()) > spec.shooting_range) continue;
      u.cooldown_remaining = spec.cooldown_ticks;
      const double dealt = std::min(b.health, spec.base_fire);
      b.health -= dealt;
      result.events.push_back({Event::Kind::Hit, u.id, true, b.id, dealt});
    }
  }
  // (5) deaths and building destruction
  for (auto& u : world.units) {
    if (u.alive && u.health <= 0.0) {
      u.health = 0.0;
      u.alive = false;
      u.sieged = false;
      u.cooldown_remaining = 0;
      result.events.push_back({Event::Kind::Kill, u.id, false, u.id, 0.0});
    }
  }
  for (auto& b : world.buildings) {
    if (b.alive && b.health <= 0.0) {
      b.health = 0.0;
      b.alive = false;
      result.events.push_back({Event::Kind::BuildingDestroyed, b.id, true, b.id, 0.0});
    }
  }
  // (6) bookkeeping
  for (auto& u : world.units) {
    u.last_action = result.actions[u.id];
    if (u.cooldown_remaining > 0) --u.cooldown_remaining;
  }
  ++world.tick;
  return result;
}

Outcome outcome(const WorldState& world) {
  bool ally_alive = false, enemy_alive = false;
  for (std::size_t i = 0; i < world.units.size(); ++i) {
    if (!world.units[i].alive) continue;
    (i < world.n_allies ? ally_alive : enemy_alive) = true;
  }
  if (!ally_alive) return Outcome::Loss;
  if (!enemy_alive) return Outcome::Win;
  if (world.tick >= world.episode_limit) return Outcome::Timeout;
  return Outcome::Ongoing;
}

}  // namespace hf::combat
