#include <doctest.h>

#include "hillfight/combat/engine.hpp"
#include "hillfight/perception/perception.hpp"
#include "hillfight/scenario/scenario.hpp"

using namespace hf::scenario;
using hf::combat::Archetype;

TEST_CASE("built-in catalogue") {
  const auto names = builtin_names();
  CHECK(names == std::vector<std::string>{"def_armored", "def_infantry", "def_outnumbered", "off_complicated",
                                          "off_distant", "off_hard", "off_near", "off_superhard", "smoke_3v2"});
  for (const auto& n : names) {
    CAPTURE(n);
    const Scenario sc = load_scenario(n);
    CHECK(sc.name == n);
    CHECK(validate(sc).empty());
  }
}

TEST_CASE("roster sizes") {
  auto inf = load_scenario("def_infantry");
  CHECK(roster_size(inf.allies) == 5);
  CHECK(roster_size(inf.enemies) == 7);
  CHECK(inf.supply_difference == -2);
  CHECK(load_scenario("def_armored").supply_difference == -6);
  CHECK(load_scenario("def_outnumbered").supply_difference == -9);

  auto hard = load_scenario("off_hard");
  CHECK(roster_counts(hard.allies) == roster_counts(hard.enemies));
  CHECK(hard.formation == Formation::Spread);
  CHECK(load_scenario("off_superhard").formation == Formation::Gathered);

  auto smoke = load_scenario("smoke_3v2");
  auto world = instantiate(smoke, 1);
  CHECK(world.n_allies == 3);
  CHECK(world.n_enemies() == 2);
  for (const auto& u : world.units) CHECK(world.terrain.elevation(u.pos) == 0);
}

TEST_CASE("elevation placement") {
  for (const auto& n : builtin_names()) {
    const Scenario sc = load_scenario(n);
    const auto world = instantiate(sc, 0);
    for (const auto& u : world.units) {
      CAPTURE(n);
      if (sc.kind == ScenarioKind::Defensive && u.team == hf::combat::Team::Ally) CHECK(world.terrain.elevation(u.pos) == 1);
      if (sc.kind == ScenarioKind::Offensive) {
        CHECK(world.terrain.elevation(u.pos) == (u.team == hf::combat::Team::Ally ? 0 : 1));
      }
    }
  }
}

TEST_CASE("validation catches broken rosters and geometry") {
  Scenario sc = load_scenario("def_infantry");
  sc.enemies = {{Archetype::Marine, 24.5, 3.5, 5, false}};
  sc.supply_difference = 6 - 5;
  const auto v = validate(sc);
  CHECK(std::find(v.begin(), v.end(), "enemy roster mismatch") != v.end());

  Scenario col = load_scenario("smoke_3v2");
  col.buildings.push_back({hf::combat::BuildingKind::Stone, {3, 7, 1, 1}, 50});
  const auto v2 = validate(col);
  REQUIRE_FALSE(v2.empty());
  CHECK(v2.front().rfind("spawn collision", 0) == 0);

  Scenario imp = load_scenario("smoke_3v2");
  imp.impassable.push_back({10, 7, 1, 1});
  CHECK(validate(imp).front().rfind("spawn on impassable cell", 0) == 0);

  Scenario sup = load_scenario("smoke_3v2");
  sup.supply_difference = 3;
  CHECK(validate(sup).size() == 1);
}

TEST_CASE("round trip through text") {
  for (const auto& n : builtin_names()) {
    CAPTURE(n);
    const Scenario sc = load_scenario(n);
    const std::string text = serialize(sc);
    const Scenario back = parse_scenario(text);
    CHECK(back == sc);
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("parser rejects malformed input") {
  CHECK_THROWS_AS(parse_scenario("[map]\nwidth = 10\ncolour = red\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[weather]\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("width = 3\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[allies]\nzergling = 1 1\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[allies]\nmarine = 1 1 1 sieged\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[map]\nwidth = ten\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[map]\nwidth = 10\nwidth = 12\n"), ScenarioError);
  CHECK_THROWS_AS(parse_scenario("[behavior]\nlane = 1 2 3\n"), ScenarioError);
  CHECK_THROWS_AS(load_scenario("no_such_scenario"), ScenarioError);

  const Scenario ok = parse_scenario("# c\n[map]\nwidth = 4 # trailing\nheight = 4\n[allies]\nsiege_tank = 1.5 1.5 1 sieged\n");
  CHECK(ok.width == 4);
  REQUIRE(ok.allies.size() == 1);
  CHECK(ok.allies[0].sieged);
}

TEST_CASE("observation and state sizes per built-in") {
  using namespace hf::perception;
  for (const auto& n : builtin_names()) {
    CAPTURE(n);
    const auto world = instantiate(load_scenario(n), 3);
    const std::size_t na = world.n_allies, ne = world.n_enemies(), nb = world.buildings.size();
    const auto obs = observe_all(world, shared_visibility(world));
    for (const auto& o : obs) CHECK(o.size() == 12 + (4 + 8) + (na - 1) * (14 + 7 + ne + nb) + 14 * (ne + nb));
    CHECK(global_state(world, obs).size() == na * obs[0].size());
    CHECK(global_state(world, obs, StateMode::Smac).size() == na * (4 + 8 + 6 + ne) + ne * (3 + 8));
  }
}

TEST_CASE("def_infantry enemies reach the hill") {
  auto world = instantiate(load_scenario("def_infantry"), 5);
  std::vector<int> stop(world.n_allies, hf::combat::kStop);
  bool contact = false;
  for (int t = 0; t < world.episode_limit && hf::combat::outcome(world) == hf::combat::Outcome::Ongoing; ++t) {
    std::vector<int> acts = stop;
    for (std::size_t i = 0; i < world.n_allies; ++i)
      if (!world.units[i].alive) acts[i] = hf::combat::kNoop;
    const auto r = hf::combat::step(world, acts);
    for (const auto& e : r.events)
      if (e.source >= world.n_allies && !e.target_is_building) contact = true;
  }
  CHECK(contact);
}

TEST_CASE("walled-off enemies are reported") {
  Scenario sc = load_scenario("smoke_3v2");
  sc.impassable.push_back({8, 0, 1, 16});
  const auto v = validate(sc);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "enemy marine unreachable");
}
