#include "hillfight/scenario/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace hf::scenario {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_scenarios();
}

using combat::Archetype;

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Defensive: return "defensive";
    case ScenarioKind::Offensive: return "offensive";
    case ScenarioKind::Smoke: return "smoke";
  }
  return "?";
}

std::string_view to_string(Formation formation) { return formation == Formation::Spread ? "spread" : "gathered"; }

std::string_view to_string(Approach approach) {
  switch (approach) {
    case Approach::None: return "none";
    case Approach::OneSided: return "one_sided";
    case Approach::TwoSided: return "two_sided";
  }
  return "?";
}

std::string_view to_string(DistanceClass distance_class) {
  switch (distance_class) {
    case DistanceClass::None: return "none";
    case DistanceClass::Near: return "near";
    case DistanceClass::Distant: return "distant";
    case DistanceClass::Complicated: return "complicated";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

class LineParser {
 public:
  LineParser(int line, std::string_view key) : line_(line), key_(key) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ScenarioError("line " + std::to_string(line_) + " (" + std::string(key_) + "): " + what);
  }

  double number(std::string_view tok) const {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) fail("expected a number, got '" + std::string(tok) + "'");
    return v;
  }

  int integer(std::string_view tok) const {
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) fail("expected an integer, got '" + std::string(tok) + "'");
    return v;
  }

  void arity(const std::vector<std::string_view>& toks, std::size_t lo, std::size_t hi) const {
    if (toks.size() < lo || toks.size() > hi) fail("wrong number of values");
  }

  combat::CellRect rect(const std::vector<std::string_view>& toks, std::size_t at) const {
    combat::CellRect r{integer(toks[at]), integer(toks[at + 1]), integer(toks[at + 2]), integer(toks[at + 3])};
    if (r.w <= 0 || r.h <= 0) fail("rectangle extents must be positive");
    return r;
  }

 private:
  int line_;
  std::string_view key_;
};

std::string fmt_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt_rect(const combat::CellRect& r) {
  return std::to_string(r.x) + " " + std::to_string(r.y) + " " + std::to_string(r.w) + " " + std::to_string(r.h);
}

template <typename E, std::size_t N>
std::optional<E> parse_enum(std::string_view tok, const E (&values)[N]) {
  for (E v : values) {
    if (to_string(v) == tok) return v;
  }
  return std::nullopt;
}

void parse_spawn(Scenario& sc, bool ally, const LineParser& lp, std::string_view key,
                 const std::vector<std::string_view>& toks) {
  const auto archetype = combat::parse_archetype(key);
  if (!archetype) lp.fail("unknown archetype");
  lp.arity(toks, 2, 4);
  SpawnGroup g;
  g.archetype = *archetype;
  g.x = lp.number(toks[0]);
  g.y = lp.number(toks[1]);
  std::size_t next = 2;
  if (toks.size() > next && toks[next] != "sieged") g.count = lp.integer(toks[next++]);
  if (toks.size() > next) {
    if (toks[next] != "sieged") lp.fail("unexpected token '" + std::string(toks[next]) + "'");
    if (g.archetype != Archetype::SiegeTank) lp.fail("only siege tanks can start sieged");
    g.sieged = true;
    ++next;
  }
  if (next != toks.size()) lp.fail("unexpected trailing values");
  if (g.count < 1) lp.fail("count must be at least 1");
  (ally ? sc.allies : sc.enemies).push_back(g);
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario sc;
  std::string section;
  std::set<std::string> seen_singletons;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ScenarioError("line " + std::to_string(line_no) + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "map" && section != "allies" && section != "enemies" && section != "behavior" && section != "meta")
        throw ScenarioError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ScenarioError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const auto toks = split_ws(trim(line.substr(eq + 1)));
    LineParser lp(line_no, key);
    if (section.empty()) lp.fail("entry outside of any section");
    if (toks.empty()) lp.fail("missing value");

    auto singleton = [&] {
      if (!seen_singletons.insert(section + "." + std::string(key)).second) lp.fail("duplicate key");
      lp.arity(toks, 1, 1);
    };

    if (section == "allies" || section == "enemies") {
      parse_spawn(sc, section == "allies", lp, key, toks);
    } else if (section == "map") {
      if (key == "width") {
        singleton();
        sc.width = lp.integer(toks[0]);
      } else if (key == "height") {
        singleton();
        sc.height = lp.integer(toks[0]);
      } else if (key == "plateau") {
        lp.arity(toks, 4, 4);
        sc.plateaus.push_back(lp.rect(toks, 0));
      } else if (key == "impassable") {
        lp.arity(toks, 4, 4);
        sc.impassable.push_back(lp.rect(toks, 0));
      } else if (key == "building") {
        lp.arity(toks, 6, 6);
        const auto kind = combat::parse_building_kind(toks[0]);
        if (!kind) lp.fail("unknown building kind");
        BuildingSpec b{*kind, lp.rect(toks, 1), lp.number(toks[5])};
        if (!(b.health > 0.0)) lp.fail("building health must be positive");
        sc.buildings.push_back(b);
      } else {
        lp.fail("unknown key");
      }
    } else if (section == "behavior") {
      if (key == "mode") {
        singleton();
        if (toks[0] == "approach") {
          sc.mode = combat::EnemyMode::Approach;
        } else if (toks[0] == "hold") {
          sc.mode = combat::EnemyMode::Hold;
        } else {
          lp.fail("mode must be approach or hold");
        }
      } else if (key == "formation") {
        singleton();
        const auto f = parse_enum(toks[0], {Formation::Spread, Formation::Gathered});
        if (!f) lp.fail("formation must be spread or gathered");
        sc.formation = *f;
      } else if (key == "approach") {
        singleton();
        const auto a = parse_enum(toks[0], {Approach::None, Approach::OneSided, Approach::TwoSided});
        if (!a) lp.fail("approach must be none, one_sided or two_sided");
        sc.approach = *a;
      } else if (key == "lane") {
        if (toks.size() < 2 || toks.size() % 2 != 0) lp.fail("lane needs x y pairs");
        std::vector<combat::Vec2> lane;
        for (std::size_t i = 0; i < toks.size(); i += 2) lane.push_back({lp.number(toks[i]), lp.number(toks[i + 1])});
        sc.lanes.push_back(std::move(lane));
      } else {
        lp.fail("unknown key");
      }
    } else {  // meta
      singleton();
      if (key == "name") {
        sc.name = std::string(toks[0]);
      } else if (key == "kind") {
        const auto k = parse_enum(toks[0], {ScenarioKind::Defensive, ScenarioKind::Offensive, ScenarioKind::Smoke});
        if (!k) lp.fail("kind must be defensive, offensive or smoke");
        sc.kind = *k;
      } else if (key == "supply_difference") {
        sc.supply_difference = lp.integer(toks[0]);
      } else if (key == "distance_class") {
        const auto d = parse_enum(
            toks[0], {DistanceClass::None, DistanceClass::Near, DistanceClass::Distant, DistanceClass::Complicated});
        if (!d) lp.fail("distance_class must be none, near, distant or complicated");
        sc.distance_class = *d;
      } else if (key == "episode_limit") {
        sc.episode_limit = lp.integer(toks[0]);
      } else {
        lp.fail("unknown key");
      }
    }
  }
  return sc;
}

std::string serialize(const Scenario& sc) {
  std::ostringstream out;
  out << "[map]\n";
  out << "width = " << sc.width << "\n";
  out << "height = " << sc.height << "\n";
  for (const auto& r : sc.plateaus) out << "plateau = " << fmt_rect(r) << "\n";
  for (const auto& r : sc.impassable) out << "impassable = " << fmt_rect(r) << "\n";
  for (const auto& b : sc.buildings) {
    out << "building = " << to_string(b.kind) << " " << fmt_rect(b.footprint) << " " << fmt_number(b.health) << "\n";
  }
  auto roster = [&](const char* header, const std::vector<SpawnGroup>& groups) {
    out << "\n[" << header << "]\n";
    for (const auto& g : groups) {
      out << to_string(g.archetype) << " = " << fmt_number(g.x) << " " << fmt_number(g.y) << " " << g.count;
      if (g.sieged) out << " sieged";
      out << "\n";
    }
  };
  roster("allies", sc.allies);
  roster("enemies", sc.enemies);
  out << "\n[behavior]\n";
  out << "mode = " << (sc.mode == combat::EnemyMode::Approach ? "approach" : "hold") << "\n";
  out << "formation = " << to_string(sc.formation) << "\n";
  out << "approach = " << to_string(sc.approach) << "\n";
  for (const auto& lane : sc.lanes) {
    out << "lane =";
    for (const auto& p : lane) out << " " << fmt_number(p.x) << " " << fmt_number(p.y);
    out << "\n";
  }
  out << "\n[meta]\n";
  if (!sc.name.empty()) out << "name = " << sc.name << "\n";
  out << "kind = " << to_string(sc.kind) << "\n";
  out << "supply_difference = " << sc.supply_difference << "\n";
  out << "distance_class = " << to_string(sc.distance_class) << "\n";
  out << "episode_limit = " << sc.episode_limit << "\n";
  return out.str();
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::embedded_scenarios()) names.emplace_back(name);
  std::sort(names.begin(), names.end());
  return names;
}

bool is_builtin(std::string_view name) {
  const auto& table = detail::embedded_scenarios();
  return std::any_of(table.begin(), table.end(), [&](const auto& e) { return e.first == name; });
}

Scenario load_scenario(std::string_view name_or_path) {
  Scenario sc;
  bool found = false;
  for (const auto& [name, text] : detail::embedded_scenarios()) {
    if (name == name_or_path) {
      sc = parse_scenario(text);
      if (sc.name.empty()) sc.name = std::string(name);
      found = true;
      break;
    }
  }
  if (!found) {
    const std::filesystem::path path{std::string(name_or_path)};
    std::ifstream in(path);
    if (!in) throw ScenarioError("no built-in scenario or readable file named '" + std::string(name_or_path) + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      sc = parse_scenario(ss.str());
    } catch (const ScenarioError& e) {
      throw ScenarioError(path.string() + ": " + e.what());
    }
    if (sc.name.empty()) sc.name = path.stem().string();
  }
  const auto problems = validate(sc);
  if (!problems.empty()) {
    std::string msg = "scenario '" + sc.name + "' is invalid:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ScenarioError(msg);
  }
  return sc;
}

std::map<Archetype, int> roster_counts(const std::vector<SpawnGroup>& roster) {
  std::map<Archetype, int> counts;
  for (const auto& g : roster) counts[g.archetype] += g.count;
  return counts;
}

int roster_supply(const std::vector<SpawnGroup>& roster, const combat::UnitCatalog& catalog) {
  int total = 0;
  for (const auto& g : roster) total += g.count * catalog.get(g.archetype).supply;
  return total;
}

std::size_t roster_size(const std::vector<SpawnGroup>& roster) {
  std::size_t n = 0;
  for (const auto& g : roster) n += static_cast<std::size_t>(g.count);
  return n;
}

namespace {

struct ExpectedRoster {
  std::string_view name;
  ScenarioKind kind;
  std::map<Archetype, int> allies;
  std::map<Archetype, int> enemies;
  std::optional<Formation> formation;
  DistanceClass distance_class;
};

const std::vector<ExpectedRoster>& expected_rosters() {
  using A = Archetype;
  const std::map<A, int> def_allies{{A::SiegeTank, 1}, {A::Tank, 1}, {A::Marauder, 1}, {A::Marine, 5}};
  const std::map<A, int> off_allies{{A::SiegeTank, 3}, {A::Tank, 3}, {A::Marauder, 3}, {A::Marine, 4}};
  const std::map<A, int> off_enemies{{A::SiegeTank, 1}, {A::Tank, 2}, {A::Marauder, 2}, {A::Marine, 4}};
  static const std::vector<ExpectedRoster> table = {
      {"def_infantry", ScenarioKind::Defensive, {{A::Marauder, 1}, {A::Marine, 4}}, {{A::Marauder, 1}, {A::Marine, 6}},
       std::nullopt, DistanceClass::None},
      {"def_armored", ScenarioKind::Defensive, def_allies, {{A::Tank, 2}, {A::Marauder, 2}, {A::Marine, 9}},
       std::nullopt, DistanceClass::None},
      {"def_outnumbered", ScenarioKind::Defensive, def_allies, {{A::Tank, 2}, {A::Marauder, 3}, {A::Marine, 10}},
       std::nullopt, DistanceClass::None},
      {"off_near", ScenarioKind::Offensive, off_allies, off_enemies, Formation::Spread, DistanceClass::Near},
      {"off_distant", ScenarioKind::Offensive, off_allies, off_enemies, Formation::Spread, DistanceClass::Distant},
      {"off_complicated", ScenarioKind::Offensive, off_allies, off_enemies, Formation::Spread,
       DistanceClass::Complicated},
      {"off_hard", ScenarioKind::Offensive, off_enemies, off_enemies, Formation::Spread, DistanceClass::Complicated},
      {"off_superhard", ScenarioKind::Offensive, off_enemies, off_enemies, Formation::Gathered,
       DistanceClass::Complicated},
      {"smoke_3v2", ScenarioKind::Smoke, {{A::Marine, 3}}, {{A::Marine, 2}}, std::nullopt, DistanceClass::None},
  };
  return table;
}

bool in_bounds(const Scenario& sc, combat::Vec2 p) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x < sc.width && p.y < sc.height;
}

bool rect_in_bounds(const Scenario& sc, const combat::CellRect& r) {
  return r.x >= 0 && r.y >= 0 && r.x + r.w <= sc.width && r.y + r.h <= sc.height;
}

int elevation_at(const Scenario& sc, combat::Cell c) {
  for (const auto& p : sc.plateaus) {
    if (p.contains(c)) return 1;
  }
  return 0;
}

}  // namespace

std::vector<std::string> validate(const Scenario& sc) {
  std::vector<std::string> v;
  if (sc.width <= 0 || sc.height <= 0) {
    v.push_back("map extents must be positive");
    return v;
  }
  if (sc.episode_limit <= 0) v.push_back("episode_limit must be positive");
  if (sc.allies.empty()) v.push_back("ally roster is empty");
  if (sc.enemies.empty()) v.push_back("enemy roster is empty");

  for (const auto& r : sc.plateaus)
    if (!rect_in_bounds(sc, r)) v.push_back("plateau " + fmt_rect(r) + " leaves the map");
  for (const auto& r : sc.impassable)
    if (!rect_in_bounds(sc, r)) v.push_back("impassable rectangle " + fmt_rect(r) + " leaves the map");
  for (const auto& b : sc.buildings)
    if (!rect_in_bounds(sc, b.footprint)) v.push_back("building " + fmt_rect(b.footprint) + " leaves the map");

  // Spawns: in bounds, walkable, not under a building, one unit per cell.
  std::set<std::pair<int, int>> occupied;
  auto check_roster = [&](const std::vector<SpawnGroup>& roster, const char* side, int required_elevation) {
    for (const auto& g : roster) {
      for (int c = 0; c < g.count; ++c) {
        const combat::Vec2 p{g.x + c, g.y};
        const std::string where = std::string(side) + " " + std::string(to_string(g.archetype)) + " at (" +
                                  fmt_number(p.x) + ", " + fmt_number(p.y) + ")";
        if (!in_bounds(sc, p)) {
          v.push_back("spawn out of bounds: " + where);
          continue;
        }
        const combat::Cell cell = combat::cell_of(p);
        if (std::any_of(sc.impassable.begin(), sc.impassable.end(), [&](const auto& r) { return r.contains(cell); }))
          v.push_back("spawn on impassable cell: " + where);
        if (std::any_of(sc.buildings.begin(), sc.buildings.end(),
                        [&](const auto& b) { return b.footprint.contains(cell); }))
          v.push_back("spawn collision: " + where + " is inside a building");
        if (!occupied.insert({cell.x, cell.y}).second) v.push_back("spawn collision: " + where + " shares a cell");
        if (required_elevation >= 0 && elevation_at(sc, cell) != required_elevation) {
          v.push_back(std::string(side) + " spawn elevation must be " + std::to_string(required_elevation) + ": " +
                      where);
        }
      }
    }
  };
  const int ally_elev = sc.kind == ScenarioKind::Defensive ? 1 : sc.kind == ScenarioKind::Offensive ? 0 : -1;
  const int enemy_elev = sc.kind == ScenarioKind::Offensive ? 1 : -1;
  check_roster(sc.allies, "ally", ally_elev);
  check_roster(sc.enemies, "enemy", enemy_elev);

  // Every enemy must be reachable on foot from the first ally spawn
  // (buildings are destructible, so only cliffs count as walls).
  if (!sc.allies.empty() && v.empty()) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(sc.width) * sc.height, 0);
    auto blocked = [&](combat::Cell c) {
      return std::any_of(sc.impassable.begin(), sc.impassable.end(), [&](const auto& r) { return r.contains(c); });
    };
    std::vector<combat::Cell> frontier{combat::cell_of({sc.allies.front().x, sc.allies.front().y})};
    seen[frontier.front().y * sc.width + frontier.front().x] = 1;
    while (!frontier.empty()) {
      const combat::Cell c = frontier.back();
      frontier.pop_back();
      const combat::Cell next[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
      for (const auto& n : next) {
        if (n.x < 0 || n.y < 0 || n.x >= sc.width || n.y >= sc.height || blocked(n)) continue;
        auto& flag = seen[n.y * sc.width + n.x];
        if (!flag) {
          flag = 1;
          frontier.push_back(n);
        }
      }
    }
    for (const auto& g : sc.enemies) {
      const combat::Cell c = combat::cell_of({g.x, g.y});
      if (!seen[c.y * sc.width + c.x]) v.push_back("enemy " + std::string(to_string(g.archetype)) + " unreachable");
    }
  }

  if (sc.mode == combat::EnemyMode::Approach && sc.lanes.empty()) v.push_back("approach mode needs at least one lane");
  for (const auto& lane : sc.lanes)
    for (const auto& p : lane)
      if (!in_bounds(sc, p)) v.push_back("lane waypoint (" + fmt_number(p.x) + ", " + fmt_number(p.y) + ") leaves the map");

  const int diff = roster_supply(sc.allies) - roster_supply(sc.enemies);
  if (diff != sc.supply_difference) {
    v.push_back("supply difference metadata mismatch: declared " + std::to_string(sc.supply_difference) +
                ", rosters give " + std::to_string(diff));
  }
  if (sc.kind == ScenarioKind::Defensive && sc.supply_difference != -2 && sc.supply_difference != -6 &&
      sc.supply_difference != -9) {
    v.push_back("defensive supply difference must be -2, -6 or -9");
  }

  for (const auto& e : expected_rosters()) {
    if (e.name != sc.name) continue;
    if (sc.kind != e.kind) v.push_back("kind mismatch for " + sc.name);
    if (roster_counts(sc.allies) != e.allies) v.push_back("ally roster mismatch");
    if (roster_counts(sc.enemies) != e.enemies) v.push_back("enemy roster mismatch");
    if (e.formation && sc.formation != *e.formation) v.push_back("formation mismatch");
    if (sc.distance_class != e.distance_class) v.push_back("distance class mismatch");
  }
  return v;
}

combat::WorldState instantiate(const Scenario& sc, std::uint64_t seed, const combat::UnitCatalog& catalog) {
  combat::WorldState world;
  world.terrain = combat::TerrainGrid(sc.width, sc.height);
  for (const auto& p : sc.plateaus) world.terrain.set_elevation(p, 1);
  for (const auto& r : sc.impassable) world.terrain.set_impassable(r);
  world.catalog = catalog;
  world.rng = combat::WorldRng(seed);
  world.episode_limit = sc.episode_limit;
  world.behavior.mode = sc.mode;
  world.behavior.lanes = sc.lanes;
  for (const auto& b : sc.buildings) {
    combat::Building building;
    building.id = world.buildings.size();
    building.kind = b.kind;
    building.footprint = b.footprint;
    building.health = building.max_health = b.health;
    world.buildings.push_back(building);
  }
  auto spawn = [&](const std::vector<SpawnGroup>& roster, combat::Team team) {
    for (const auto& g : roster) {
      for (int c = 0; c < g.count; ++c) {
        combat::UnitState u;
        u.id = world.units.size();
        u.team = team;
        u.archetype = g.archetype;
        u.pos = {g.x + c, g.y};
        u.sieged = g.sieged;
        u.health = catalog.get(g.archetype, g.sieged).max_health;
        world.units.push_back(u);
      }
    }
  };
  spawn(sc.allies, combat::Team::Ally);
  world.n_allies = world.units.size();
  spawn(sc.enemies, combat::Team::Enemy);
  for (std::size_t k = 0; k < world.n_enemies(); ++k) world.enemy(k).lane = k;
  return world;
}

}  // namespace hf::scenario
