#include <doctest.h>

#include <random>

#include "hillfight/combat/engine.hpp"
#include "hillfight/perception/perception.hpp"
#include "support/world_builder.hpp"

using namespace hf::combat;
using namespace hf::perception;
using hf::testing::add_building;
using hf::testing::add_unit;
using hf::testing::flat_world;

TEST_CASE("sight range and line of sight") {
  auto world = flat_world(40, 40);
  add_unit(world, Team::Ally, Archetype::Marine, 10.0, 10.0);
  add_unit(world, Team::Enemy, Archetype::Marine, 18.9, 10.0);  // 8.9
  add_unit(world, Team::Enemy, Archetype::Marine, 10.0, 19.1);  // 9.1
  add_unit(world, Team::Enemy, Archetype::Marine, 2.0, 10.0);   // 8, behind a stone
  add_building(world, BuildingKind::Stone, {5, 9, 1, 2});
  const auto vis = visibility(world);
  CHECK(vis.cols() == 1 + 3 + 1);
  CHECK(vis(0, 0) == 1);
  CHECK(vis(0, vis.enemy_col(0)) == 1);
  CHECK(vis(0, vis.enemy_col(1)) == 0);
  CHECK(vis(0, vis.enemy_col(2)) == 0);
  CHECK(vis(0, vis.building_col(0)) == 1);  // a building never hides itself

  world.units[0].alive = false;
  const auto dead = visibility(world);
  for (std::size_t c = 0; c < dead.cols(); ++c) CHECK(dead(0, c) == 0);
}

TEST_CASE("communication shares rows within range") {
  auto world = flat_world(60, 20);
  add_unit(world, Team::Ally, Archetype::Marine, 5.0, 5.0);   // i
  add_unit(world, Team::Ally, Archetype::Marine, 16.0, 5.0);  // j, 11 away
  add_unit(world, Team::Enemy, Archetype::Marine, 24.0, 5.0); // k, seen only by j
  const auto raw = visibility(world);
  CHECK(raw(0, raw.enemy_col(0)) == 0);
  CHECK(raw(1, raw.enemy_col(0)) == 1);
  const auto shared = communicate(raw, world);
  CHECK(shared(0, shared.enemy_col(0)) == 1);

  PerceptionConfig off;
  off.communicate = false;
  CHECK(communicate(raw, world, off) == raw);

  world.units[1].pos = {17.5, 5.0};  // 12.5 > 12
  world.units[2].pos = {25.0, 5.0};
  const auto far = communicate(visibility(world), world);
  CHECK(far(0, far.enemy_col(0)) == 0);

  // A siege tank pair communicates up to 16; mixed pairs use the smaller range.
  world.units[0].archetype = Archetype::SiegeTank;
  world.units[1].archetype = Archetype::SiegeTank;
  world.units[1].pos = {20.5, 5.0};  // 15.5
  world.units[2].pos = {28.0, 5.0};
  CHECK(communicate(visibility(world), world)(0, 2) == 1);
  world.units[1].archetype = Archetype::Marine;
  CHECK(communicate(visibility(world), world)(0, 2) == 0);

  PerceptionConfig bc;
  bc.communicate = false;
  bc.broadcast = true;
  world.units[1].pos = {40.0, 5.0};
  world.units[2].pos = {45.0, 5.0};
  CHECK(communicate(visibility(world), world, bc)(0, 2) == 1);
}

TEST_CASE("closure versus single pass on a chain") {
  auto world = flat_world(80, 20);
  add_unit(world, Team::Ally, Archetype::Marine, 5.0, 5.0);
  add_unit(world, Team::Ally, Archetype::Marine, 15.0, 5.0);
  add_unit(world, Team::Ally, Archetype::Marine, 25.0, 5.0);
  add_unit(world, Team::Enemy, Archetype::Marine, 33.0, 5.0);
  const auto raw = visibility(world);
  const auto closure = communicate(raw, world);
  PerceptionConfig sp;
  sp.comm_mode = CommMode::SinglePass;
  const auto single = communicate(raw, world, sp);
  CHECK(closure(0, closure.enemy_col(0)) == 1);
  CHECK(single(0, single.enemy_col(0)) == 0);
  CHECK(single(1, single.enemy_col(0)) == 1);
}

TEST_CASE("communication is monotone on random worlds") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0.5, 39.5);
  for (int trial = 0; trial < 200; ++trial) {
    auto world = flat_world(40, 40, trial);
    for (int i = 0; i < 5; ++i) add_unit(world, Team::Ally, static_cast<Archetype>(i % 4), pos(rng), pos(rng));
    for (int i = 0; i < 6; ++i) add_unit(world, Team::Enemy, Archetype::Marine, pos(rng), pos(rng));
    add_building(world, BuildingKind::Tree, {static_cast<int>(pos(rng)), static_cast<int>(pos(rng)), 2, 2});
    world.units[trial % 5].alive = trial % 3 != 0;
    const auto raw = visibility(world);
    for (auto mode : {CommMode::Closure, CommMode::SinglePass}) {
      PerceptionConfig cfg;
      cfg.comm_mode = mode;
      const auto out = communicate(raw, world, cfg);
      for (std::size_t i = 0; i < raw.rows(); ++i)
        for (std::size_t c = 0; c < raw.cols(); ++c) REQUIRE(out(i, c) >= raw(i, c));
    }
  }
}

TEST_CASE("observation length matches the closed form") {
  CHECK(observation_size(5, 7, 0) == 12 + 12 + 4 * (14 + 7 + 7) + 14 * 7);
  CHECK(smac_state_size(5, 7) == 5 * (4 + 8 + 6 + 7) + 7 * (3 + 8));
  CHECK(state_size(2, 1, 0, StateMode::Concat) == 2 * observation_size(2, 1, 0));

  auto world = flat_world(30, 30);
  add_unit(world, Team::Ally, Archetype::Marine, 5.5, 5.5);
  add_unit(world, Team::Ally, Archetype::SiegeTank, 6.5, 5.5);
  add_unit(world, Team::Enemy, Archetype::Tank, 9.5, 5.5);
  add_unit(world, Team::Enemy, Archetype::Marine, 25.5, 25.5);
  add_building(world, BuildingKind::Tree, {5, 8, 1, 1});
  const auto vis = shared_visibility(world);
  const auto obs = observe_all(world, vis);
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].size() == observation_size(2, 2, 1));
  CHECK(global_state(world, obs).size() == state_size(2, 2, 1, StateMode::Concat));
  CHECK(global_state(world, obs, StateMode::Smac).size() == smac_state_size(2, 2));
}

TEST_CASE("observation contents") {
  auto world = flat_world(30, 30);
  world.terrain.set_elevation({0, 0, 30, 5}, 1);
  add_unit(world, Team::Ally, Archetype::Marine, 5.5, 5.5);
  add_unit(world, Team::Ally, Archetype::Marauder, 7.5, 5.5);
  add_unit(world, Team::Enemy, Archetype::Tank, 9.5, 5.5);   // same elevation
  add_unit(world, Team::Enemy, Archetype::Marine, 9.5, 2.5); // on the hill
  add_unit(world, Team::Enemy, Archetype::Marine, 25.5, 25.5);
  world.units[1].last_action = kEast;
  const auto vis = shared_visibility(world);
  const auto o = observe(world, vis, 0);
  const std::size_t ally0 = kMoveFeatures + kOwnFeatures;
  const std::size_t enemy0 = ally0 + ally_block_width(3, 0);

  CHECK(o[0] == 1.0);  // north legal
  CHECK(o[kMoveFeatures + 0] == 1.0);
  CHECK(o[kMoveFeatures + 1] == doctest::Approx(5.5 / 30));
  CHECK(o[kMoveFeatures + 4 + entity_type_index(Archetype::Marine, false)] == 1.0);

  CHECK(o[ally0] == 1.0);
  CHECK(o[ally0 + 2] == doctest::Approx(2.0 / 9));
  CHECK(o[ally0 + 6 + entity_type_index(Archetype::Marauder, false)] == 1.0);
  CHECK(o[ally0 + kEntityFeatures + kEast] == 1.0);

  CHECK(o[enemy0] == 1.0);
  CHECK(o[enemy0 + 3] == doctest::Approx(4.0 / 9));
  CHECK(o[enemy0 + 5] == 0.0);
  CHECK(o[enemy0 + kEntityFeatures + 5] == 1.0);  // rel z of the hill marine
  // hidden enemy: whole block zero
  for (std::size_t f = 0; f < kEntityFeatures; ++f) CHECK(o[enemy0 + 2 * kEntityFeatures + f] == 0.0);

  world.units[0].alive = false;
  const auto dead = observe(world, shared_visibility(world), 0);
  CHECK(dead.size() == o.size());
  CHECK(std::all_of(dead.begin(), dead.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("available actions require visibility") {
  auto world = flat_world(40, 20);
  add_unit(world, Team::Ally, Archetype::SiegeTank, 5.0, 5.0, true);
  add_unit(world, Team::Ally, Archetype::Marine, 14.0, 5.0);
  add_unit(world, Team::Enemy, Archetype::Marine, 20.0, 5.0);  // 15 from the tank, 6 from the marine
  auto raw = visibility(world);
  CHECK(legal_actions(world, 0)[7] == 1);
  CHECK(available_actions(world, raw, 0)[7] == 0);
  CHECK(available_actions(world, communicate(raw, world), 0)[7] == 1);
}

TEST_CASE("smac action mapping") {
  CHECK(smac_action_index(kNoop, 3) == 0);
  CHECK(smac_action_index(kSkill, 3) == 1);
  CHECK(smac_action_index(kNorth, 3) == 2);
  CHECK(smac_action_index(7 + 2, 3) == 8);
  CHECK(smac_action_index(7 + 3, 3) == 1);  // building attack
}
