#include <doctest.h>

#include <sstream>

#include "hillfight/combat/engine.hpp"
#include "hillfight/combat/replay.hpp"
#include "support/world_builder.hpp"

using namespace hf::combat;
using hf::testing::add_building;
using hf::testing::add_unit;
using hf::testing::flat_world;

TEST_CASE("firepower table") {
  const auto cat = UnitCatalog::defaults();
  const auto& marine = cat.get(Archetype::Marine);
  const auto& marauder = cat.get(Archetype::Marauder);
  const auto& tank = cat.get(Archetype::Tank);
  const auto& siege = cat.get(Archetype::SiegeTank, true);
  CHECK(damage(marine, kNoAttribute) == 6);
  CHECK(damage(marine, kMachinery | kHeavyArmor) == 6);
  CHECK(damage(marauder, kNoAttribute) == 10);
  CHECK(damage(marauder, kMachinery) == 30);
  CHECK(damage(tank, kNoAttribute) == 15);
  CHECK(damage(tank, kHeavyArmor) == 25);
  CHECK(damage(siege, kNoAttribute) == 5);
  CHECK(damage(siege, kHeavyArmor) == 10);
  CHECK(marine.shooting_range == 6);
  CHECK(marauder.shooting_range == 7);
  CHECK(tank.shooting_range == 8);
  CHECK(siege.shooting_range == 17);
  for (auto a : {Archetype::Marine, Archetype::Marauder, Archetype::Tank, Archetype::SiegeTank})
    CHECK(cat.get(a).sight_range == 9);
  CHECK_THROWS(cat.get(Archetype::Marine, true));
}

TEST_CASE("hill advantage probabilities") {
  CHECK(hit_probability(0, 1) == 0.5);
  CHECK(hit_probability(1, 0) == 1.0);
  CHECK(hit_probability(0, 0) == 1.0);
  CHECK(hit_probability(1, 1) == 1.0);
}

TEST_CASE("action space layout") {
  CHECK(action_space_size(7, 0) == 14);
  CHECK(action_space_size(3, 2) == 12);
  CHECK(move_direction(kNorth).y == 1.0);
  CHECK(move_direction(kWest).x == -1.0);
}

TEST_CASE("legal actions") {
  auto world = flat_world(10, 10);
  add_unit(world, Team::Ally, Archetype::Marine, 0.5, 0.5);
  add_unit(world, Team::Ally, Archetype::SiegeTank, 5.5, 5.5, true);
  add_unit(world, Team::Enemy, Archetype::Marine, 4.5, 0.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 9.5, 9.5);
  add_building(world, BuildingKind::Stone, {1, 0, 1, 1});

  auto m = legal_actions(world, 0);
  REQUIRE(m.size() == action_space_size(2, 1));
  CHECK(m[kNorth] == 1);
  CHECK(m[kSouth] == 0);  // off the map
  CHECK(m[kEast] == 0);   // stone
  CHECK(m[kWest] == 0);
  CHECK(m[kNoop] == 0);
  CHECK(m[kStop] == 1);
  CHECK(m[kSkill] == 1);
  CHECK(m[7] == 1);  // enemy 0 at distance 4
  CHECK(m[8] == 0);  // enemy 1 far away
  CHECK(m[9] == 1);  // stone

  auto s = legal_actions(world, 1);
  for (int a : {kNorth, kSouth, kEast, kWest}) CHECK(s[a] == 0);  // sieged tanks cannot move
  CHECK(s[7] == 1);
  CHECK(s[8] == 1);

  world.units[0].alive = false;
  auto d = legal_actions(world, 0);
  CHECK(d[kNoop] == 1);
  CHECK(std::count(d.begin(), d.end(), 1) == 1);
}

TEST_CASE("illegal action is a contract violation") {
  auto world = flat_world(10, 10);
  add_unit(world, Team::Ally, Archetype::Marine, 0.5, 0.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 9.5, 9.5);
  const int bad[] = {kSouth};
  CHECK_THROWS_AS(step(world, bad), ContractViolation);
  const int out_of_range[] = {42};
  CHECK_THROWS_AS(step(world, out_of_range), ContractViolation);
  CHECK_THROWS_AS(step(world, std::span<const int>{}), ContractViolation);
}

TEST_CASE("movement, blocking and siege toggle") {
  auto world = flat_world(10, 10);
  add_unit(world, Team::Ally, Archetype::Marine, 2.5, 2.5);
  add_unit(world, Team::Ally, Archetype::Marine, 3.5, 2.5);
  add_unit(world, Team::Ally, Archetype::SiegeTank, 2.5, 5.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 9.5, 9.5);
  world.episode_limit = 50;

  const int acts[] = {kEast, kNorth, kSkill};
  auto r = step(world, acts);
  CHECK(world.units[0].pos == Vec2{2.5, 2.5});  // destination occupied at move time
  CHECK(world.units[1].pos == Vec2{3.5, 3.5});
  CHECK(world.units[2].sieged);
  CHECK(world.tick == 1);
  CHECK(std::any_of(r.events.begin(), r.events.end(), [](const Event& e) { return e.kind == Event::Kind::SiegeToggle; }));
  CHECK(world.units[0].last_action == kEast);
}

TEST_CASE("attack resolution: damage, cooldown and kill") {
  auto world = flat_world(20, 20);
  add_unit(world, Team::Ally, Archetype::Tank, 2.5, 2.5);
  add_unit(world, Team::Enemy, Archetype::Marauder, 8.5, 2.5);
  world.catalog.mutable_spec(Archetype::Marauder).sight_range = 0;  // passive target
  const int attack[] = {7};
  auto r = step(world, attack);
  CHECK(world.units[1].health == doctest::Approx(125 - 25));
  CHECK(world.units[0].cooldown_remaining == 14);
  // Cooling down: another attack order is accepted but deals no damage.
  r = step(world, attack);
  CHECK(world.units[1].health == doctest::Approx(100));
  for (int i = 0; i < 200 && world.units[1].alive; ++i) step(world, attack);
  CHECK_FALSE(world.units[1].alive);
  CHECK(outcome(world) == Outcome::Win);
}

TEST_CASE("low to high attacks miss about half the time") {
  int hits = 0;
  const int trials = 4000;
  for (int t = 0; t < trials; ++t) {
    auto world = flat_world(20, 20, 1000 + t);
    world.terrain.set_elevation({10, 0, 10, 20}, 1);
    add_unit(world, Team::Ally, Archetype::Marine, 7.5, 5.5);
    add_unit(world, Team::Enemy, Archetype::Tank, 12.5, 5.5);
    world.catalog.mutable_spec(Archetype::Tank).shooting_range = 0;  // keep the enemy passive
    world.catalog.mutable_spec(Archetype::Tank).sight_range = 0;
    const int a[] = {7};
    step(world, a);
    hits += world.units[1].health < 160 ? 1 : 0;
  }
  CHECK(hits / double(trials) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("splash only when sieged") {
  auto world = flat_world(30, 30);
  add_unit(world, Team::Ally, Archetype::SiegeTank, 2.5, 2.5, true);
  add_unit(world, Team::Enemy, Archetype::Marine, 15.5, 2.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 15.5, 3.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 15.5, 6.5);
  const int a[] = {7};
  step(world, a);
  CHECK(world.units[1].health == doctest::Approx(40));
  CHECK(world.units[2].health == doctest::Approx(40));
  CHECK(world.units[3].health == doctest::Approx(45));
}

TEST_CASE("buildings block sight and can be destroyed") {
  auto world = flat_world(20, 20);
  add_building(world, BuildingKind::Tree, {5, 0, 1, 10}, 12);
  add_unit(world, Team::Ally, Archetype::Marine, 2.5, 2.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 8.5, 2.5);
  CHECK_FALSE(line_of_sight(world, world.units[0].pos, world.units[1].pos));
  CHECK(line_of_sight(world, world.units[0].pos, world.units[1].pos, 0));
  CHECK(line_of_sight(world, {2.5, 12.5}, {8.5, 12.5}));
  // enemy cannot see the marine through the tree, so it holds still
  const int hit_tree[] = {7 + 1};
  step(world, hit_tree);
  CHECK(world.buildings[0].health == doctest::Approx(6));
  for (int i = 0; i < 20 && world.buildings[0].alive; ++i) step(world, hit_tree);
  CHECK_FALSE(world.buildings[0].alive);
  CHECK(line_of_sight(world, world.units[0].pos, world.units[1].pos));
  CHECK(cell_walkable(world, {5, 3}));
}

TEST_CASE("scripted enemies approach along lanes and engage") {
  auto world = flat_world(30, 10);
  add_unit(world, Team::Ally, Archetype::Marine, 2.5, 5.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 27.5, 5.5);
  world.behavior.mode = EnemyMode::Approach;
  world.behavior.lanes = {{{15.5, 5.5}, {2.5, 5.5}}};
  const int stop[] = {kStop};
  double prev = distance(world.units[0].pos, world.units[1].pos);
  for (int i = 0; i < 10; ++i) step(world, stop);
  CHECK(distance(world.units[0].pos, world.units[1].pos) < prev - 5);
  for (int i = 0; i < 150 && outcome(world) == Outcome::Ongoing; ++i) step(world, stop);
  CHECK(world.units[0].health < 45);
}

TEST_CASE("outcomes") {
  auto world = flat_world(10, 10);
  add_unit(world, Team::Ally, Archetype::Marine, 1.5, 1.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 8.5, 8.5);
  world.episode_limit = 2;
  CHECK(outcome(world) == Outcome::Ongoing);
  const int s[] = {kStop};
  step(world, s);
  step(world, s);
  CHECK(outcome(world) == Outcome::Timeout);
  world.units[0].alive = false;
  world.units[1].alive = false;
  CHECK(outcome(world) == Outcome::Loss);
}

TEST_CASE("engine is deterministic for a fixed seed") {
  auto make = [] {
    auto w = flat_world(20, 20, 99);
    w.terrain.set_elevation({10, 0, 10, 20}, 1);
    add_unit(w, Team::Ally, Archetype::Marine, 6.5, 5.5);
    add_unit(w, Team::Ally, Archetype::Marine, 6.5, 7.5);
    add_unit(w, Team::Enemy, Archetype::Marine, 11.5, 6.5);
    return w;
  };
  auto a = make(), b = make();
  std::ostringstream la, lb;
  for (int i = 0; i < 60 && outcome(a) == Outcome::Ongoing; ++i) {
    std::vector<int> act(2);
    for (std::size_t k = 0; k < 2; ++k) act[k] = a.units[k].alive ? 7 : kNoop;
    if (legal_actions(a, 0)[7] == 0) break;
    la << to_json_line(make_replay_record(a, step(a, act))) << '\n';
    lb << to_json_line(make_replay_record(b, step(b, act))) << '\n';
  }
  CHECK(la.str() == lb.str());
  CHECK(a.rng == b.rng);
}

TEST_CASE("replay lines round trip") {
  auto world = flat_world(10, 10);
  add_unit(world, Team::Ally, Archetype::Marine, 1.5, 1.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 4.5, 1.5);
  const int a[] = {7};
  const auto rec = make_replay_record(world, step(world, a));
  const std::string line = to_json_line(rec);
  CHECK(line.find('\n') == std::string::npos);
  const auto back = parse_json_line(line);
  CHECK(back.tick == 1);
  REQUIRE(back.units.size() == 2);
  CHECK(back.units[1].team == Team::Enemy);
  CHECK(back.units[0].action == 7);
  CHECK(back.events.size() == rec.events.size());
  CHECK(to_json_line(back) == line);
  std::istringstream in(line + "\n\n" + line + "\n");
  CHECK(read_replay(in).size() == 2);
}
