#include "hillfight/perception/perception.hpp"

#include <numeric>

#include "hillfight/combat/engine.hpp"

namespace hf::perception {

using combat::Team;
using combat::UnitState;
using combat::WorldState;

VisibilityMatrix::VisibilityMatrix(std::size_t n_agents, std::size_t n_enemies, std::size_t n_buildings)
    : n_agents_(n_agents),
      n_enemies_(n_enemies),
      n_buildings_(n_buildings),
      cells_(n_agents * (n_agents + n_enemies + n_buildings), 0) {}

double comm_range(combat::Archetype archetype) {
  return archetype == combat::Archetype::SiegeTank ? kCommRangeSiegeTank : kCommRangeDefault;
}

VisibilityMatrix visibility(const WorldState& world) {
  const std::size_t n = world.n_allies;
  VisibilityMatrix vis(n, world.n_enemies(), world.buildings.size());
  for (std::size_t i = 0; i < n; ++i) {
    const UnitState& a = world.units[i];
    if (!a.alive) continue;
    const double sight = world.spec(a).sight_range;
    for (std::size_t j = 0; j < world.units.size(); ++j) {
      const UnitState& b = world.units[j];
      if (j == i) {
        vis(i, j) = 1;
        continue;
      }
      if (!b.alive || combat::distance(a.pos, b.pos) > sight) continue;
      vis(i, j) = combat::line_of_sight(world, a.pos, b.pos) ? 1 : 0;
    }
    for (std::size_t m = 0; m < world.buildings.size(); ++m) {
      const combat::Building& b = world.buildings[m];
      if (!b.alive || combat::distance(a.pos, b.center()) > sight) continue;
      vis(i, vis.building_col(m)) = combat::line_of_sight(world, a.pos, b.center(), b.id) ? 1 : 0;
    }
  }
  return vis;
}

namespace {

bool in_comm_range(const WorldState& world, const PerceptionConfig& config, std::size_t i, std::size_t j) {
  const UnitState& a = world.units[i];
  const UnitState& b = world.units[j];
  if (!a.alive || !b.alive) return false;
  if (config.broadcast) return true;
  const double r = std::min(comm_range(a.archetype), comm_range(b.archetype));
  return combat::distance(a.pos, b.pos) <= r;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

VisibilityMatrix communicate(const VisibilityMatrix& vis, const WorldState& world, const PerceptionConfig& config) {
  if (!config.communicate && !config.broadcast) return vis;
  const std::size_t n = vis.rows();
  const std::size_t cols = vis.cols();
  VisibilityMatrix out = vis;
  if (config.comm_mode == CommMode::SinglePass && !config.broadcast) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || !in_comm_range(world, config, i, j)) continue;
        for (std::size_t c = 0; c < cols; ++c) out(i, c) |= vis(j, c);
      }
    }
    return out;
  }
  // Closure: connected components of the in-range graph share the union of their rows.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (in_comm_range(world, config, i, j)) parent[find_root(parent, i)] = find_root(parent, j);
    }
  }
  VisibilityMatrix merged(n, vis.n_enemies(), vis.n_buildings());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find_root(parent, i);
    for (std::size_t c = 0; c < cols; ++c) merged(r, c) |= vis(i, c);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!world.units[i].alive) continue;
    const std::size_t r = find_root(parent, i);
    for (std::size_t c = 0; c < cols; ++c) out(i, c) = merged(r, c);
  }
  return out;
}

VisibilityMatrix shared_visibility(const WorldState& world, const PerceptionConfig& config) {
  return communicate(visibility(world), world, config);
}

std::size_t last_action_width(std::size_t n_enemies, std::size_t n_buildings) {
  return combat::kBasicActionCount + n_enemies + n_buildings;
}

std::size_t ally_block_width(std::size_t n_enemies, std::size_t n_buildings) {
  return kEntityFeatures + last_action_width(n_enemies, n_buildings);
}

std::size_t observation_size(std::size_t n_agents, std::size_t n_enemies, std::size_t n_buildings) {
  const std::size_t others = n_agents > 0 ? n_agents - 1 : 0;
  return kMoveFeatures + kOwnFeatures + others * ally_block_width(n_enemies, n_buildings) +
         kEntityFeatures * (n_enemies + n_buildings);
}

std::size_t smac_state_size(std::size_t n_agents, std::size_t n_enemies) {
  constexpr std::size_t ut = combat::kEntityTypeCount;
  return n_agents * (4 + ut + 6 + n_enemies) + n_enemies * (3 + ut);
}

std::size_t state_size(std::size_t n_agents, std::size_t n_enemies, std::size_t n_buildings, StateMode mode) {
  return mode == StateMode::Concat ? n_agents * observation_size(n_agents, n_enemies, n_buildings)
                                   : smac_state_size(n_agents, n_enemies);
}

namespace {

// [visibility, health, distance, rel x, rel y, rel z, 8-slot type one-hot]
void write_entity(double* out, double health_frac, combat::Vec2 self, int self_z, combat::Vec2 other, int other_z,
                  double sight, std::size_t type) {
  out[0] = 1.0;
  out[1] = health_frac;
  out[2] = combat::distance(self, other) / sight;
  out[3] = (other.x - self.x) / sight;
  out[4] = (other.y - self.y) / sight;
  out[5] = static_cast<double>(other_z - self_z);
  out[6 + type] = 1.0;
}

}  // namespace

std::vector<double> observe(const WorldState& world, const VisibilityMatrix& vis, std::size_t agent) {
  const std::size_t n = world.n_allies;
  const std::size_t ne = world.n_enemies();
  const std::size_t nb = world.buildings.size();
  std::vector<double> obs(observation_size(n, ne, nb), 0.0);
  const UnitState& me = world.units.at(agent);
  if (!me.alive) return obs;

  const auto& terrain = world.terrain;
  const combat::UnitSpec& spec = world.spec(me);
  const double sight = spec.sight_range;
  const int my_z = terrain.elevation(me.pos);
  double* p = obs.data();

  // Move: movement legality, then walkability of the 8 neighbouring cells.
  const auto legal = combat::legal_actions(world, agent);
  for (int a = 0; a < 4; ++a) p[a] = legal[a];
  const combat::Cell c = combat::cell_of(me.pos);
  const int offsets[8][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
  for (int k = 0; k < 8; ++k) {
    p[4 + k] = combat::cell_walkable(world, {c.x + offsets[k][0], c.y + offsets[k][1]}) ? 1.0 : 0.0;
  }
  p += kMoveFeatures;

  // Own: health, x, y, z, type.
  p[0] = me.health / spec.max_health;
  p[1] = me.pos.x / terrain.width();
  p[2] = me.pos.y / terrain.height();
  p[3] = static_cast<double>(my_z);
  p[4 + combat::entity_type_index(me.archetype, me.sieged)] = 1.0;
  p += kOwnFeatures;

  const std::size_t ally_w = ally_block_width(ne, nb);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == agent) continue;
    const UnitState& u = world.units[j];
    if (vis(agent, j)) {
      write_entity(p, u.health / world.spec(u).max_health, me.pos, my_z, u.pos, terrain.elevation(u.pos), sight,
                   combat::entity_type_index(u.archetype, u.sieged));
      if (u.last_action >= 0 && static_cast<std::size_t>(u.last_action) < ally_w - kEntityFeatures) {
        p[kEntityFeatures + u.last_action] = 1.0;
      }
    }
    p += ally_w;
  }
  for (std::size_t k = 0; k < ne; ++k) {
    const UnitState& u = world.enemy(k);
    if (vis(agent, vis.enemy_col(k))) {
      write_entity(p, u.health / world.spec(u).max_health, me.pos, my_z, u.pos, terrain.elevation(u.pos), sight,
                   combat::entity_type_index(u.archetype, u.sieged));
    }
    p += kEntityFeatures;
  }
  for (std::size_t m = 0; m < nb; ++m) {
    const combat::Building& b = world.buildings[m];
    if (vis(agent, vis.building_col(m))) {
      write_entity(p, b.health / b.max_health, me.pos, my_z, b.center(), terrain.elevation(b.center()), sight,
                   combat::entity_type_index(b.kind));
    }
    p += kEntityFeatures;
  }
  return obs;
}

std::vector<std::vector<double>> observe_all(const WorldState& world, const VisibilityMatrix& vis) {
  std::vector<std::vector<double>> out;
  out.reserve(world.n_allies);
  for (std::size_t i = 0; i < world.n_allies; ++i) out.push_back(observe(world, vis, i));
  return out;
}

std::size_t smac_action_index(int action, std::size_t n_enemies) {
  switch (action) {
    case combat::kNoop: return 0;
    case combat::kStop:
    case combat::kSkill: return 1;
    case combat::kNorth: return 2;
    case combat::kSouth: return 3;
    case combat::kEast: return 4;
    case combat::kWest: return 5;
    default: break;
  }
  const std::size_t slot = static_cast<std::size_t>(action) - combat::kBasicActionCount;
  return slot < n_enemies ? 6 + slot : 1;
}

std::vector<double> global_state(const WorldState& world, const std::vector<std::vector<double>>& observations,
                                 StateMode mode) {
  if (mode == StateMode::Concat) {
    std::vector<double> s;
    for (const auto& o : observations) s.insert(s.end(), o.begin(), o.end());
    return s;
  }
  constexpr std::size_t ut = combat::kEntityTypeCount;
  const std::size_t n = world.n_allies;
  const std::size_t ne = world.n_enemies();
  std::vector<double> s(smac_state_size(n, ne), 0.0);
  const double cx = world.terrain.width() / 2.0;
  const double cy = world.terrain.height() / 2.0;
  double* p = s.data();
  for (std::size_t i = 0; i < n; ++i) {
    const UnitState& u = world.units[i];
    if (u.alive) {
      const combat::UnitSpec& spec = world.spec(u);
      p[0] = u.health / spec.max_health;
      p[1] = static_cast<double>(u.cooldown_remaining) / spec.cooldown_ticks;
      p[2] = (u.pos.x - cx) / cx;
      p[3] = (u.pos.y - cy) / cy;
      p[4 + combat::entity_type_index(u.archetype, u.sieged)] = 1.0;
      p[4 + ut + smac_action_index(u.last_action, ne)] = 1.0;
    }
    p += 4 + ut + 6 + ne;
  }
  for (std::size_t k = 0; k < ne; ++k) {
    const UnitState& u = world.enemy(k);
    if (u.alive) {
      p[0] = u.health / world.spec(u).max_health;
      p[1] = (u.pos.x - cx) / cx;
      p[2] = (u.pos.y - cy) / cy;
      p[3 + combat::entity_type_index(u.archetype, u.sieged)] = 1.0;
    }
    p += 3 + ut;
  }
  return s;
}

std::vector<std::uint8_t> available_actions(const WorldState& world, const VisibilityMatrix& vis, std::size_t agent) {
  auto mask = combat::legal_actions(world, agent);
  const std::size_t ne = world.n_enemies();
  for (std::size_t k = 0; k < ne; ++k) {
    if (!vis(agent, vis.enemy_col(k))) mask[combat::kBasicActionCount + k] = 0;
  }
  for (std::size_t m = 0; m < world.buildings.size(); ++m) {
    if (!vis(agent, vis.building_col(m))) mask[combat::kBasicActionCount + ne + m] = 0;
  }
  return mask;
}

}  // namespace hf::perception
