#include <doctest.h>

#include <cmath>
#include <random>

#include "hillfight/reward/reward.hpp"
#include "support/world_builder.hpp"

using namespace hf::reward;
using hf::combat::Event;
using hf::combat::Vec2;

namespace {

RewardConfig raw() {
  RewardConfig c;
  c.normalize = false;
  return c;
}

}  // namespace

TEST_CASE("base reward linear formula") {
  const RewardConfig cfg = raw();
  CHECK(base_reward({}, 3, false, cfg, 0.0) == 0.0);
  const std::vector<Event> hit = {{Event::Kind::Hit, 0, false, 3, 30.0}};
  CHECK(base_reward(hit, 3, false, cfg, 0.0) == 30.0);
  const std::vector<Event> finish = {{Event::Kind::Hit, 1, false, 4, 6.0}, {Event::Kind::Kill, 4, false, 4, 0.0}};
  CHECK(base_reward(finish, 3, true, cfg, 0.0) == 216.0);
  // damage to agents and buildings earns nothing when positive_only
  const std::vector<Event> taken = {{Event::Kind::Hit, 3, false, 0, 6.0}, {Event::Kind::Hit, 0, true, 0, 6.0}};
  CHECK(base_reward(taken, 3, false, cfg, 0.0) == 0.0);
  RewardConfig neg = cfg;
  neg.positive_only = false;
  CHECK(base_reward(taken, 3, false, neg, 0.0) == -3.0);
}

TEST_CASE("normalized flawless win equals the cap") {
  auto world = hf::testing::flat_world(16, 16);
  hf::testing::add_unit(world, hf::combat::Team::Ally, hf::combat::Archetype::Marine, 1.5, 1.5);
  hf::testing::add_unit(world, hf::combat::Team::Enemy, hf::combat::Archetype::Marine, 5.5, 1.5);
  hf::testing::add_unit(world, hf::combat::Team::Enemy, hf::combat::Archetype::Marauder, 6.5, 1.5);
  RewardConfig cfg;
  const double norm = flawless_return(world, cfg);
  CHECK(norm == 45 + 125 + 2 * 10 + 200);
  const std::vector<Event> all = {{Event::Kind::Hit, 0, false, 1, 45}, {Event::Kind::Kill, 1, false, 1, 0},
                                  {Event::Kind::Hit, 0, false, 2, 125}, {Event::Kind::Kill, 2, false, 2, 0}};
  CHECK(base_reward(all, 1, true, cfg, norm) == doctest::Approx(cfg.return_cap));
}

TEST_CASE("alternative reward geometry") {
  const std::vector<Vec2> enemy = {{10, 0}};
  const std::vector<Vec2> a0 = {{0, 0}}, toward = {{1, 0}}, away = {{-1, 0}};
  CHECK(alt_reward_raw(a0, a0, enemy, enemy) == 0.0);
  CHECK(alt_reward_raw(a0, toward, enemy, enemy) == doctest::Approx(1.0));
  CHECK(alt_reward_raw(a0, away, enemy, enemy) == doctest::Approx(-1.0));
  CHECK(alt_reward_raw(a0, toward, {}, {}) == 0.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec2> prev = {{u(rng), u(rng)}, {u(rng), u(rng)}}, enemies = {{u(rng), u(rng)}, {u(rng), u(rng)}};
    std::vector<Vec2> fwd = prev, back = prev;
    const Vec2 d{u(rng) / 20, u(rng) / 20};
    fwd[0] = prev[0] + d;
    back[0] = prev[0] - d;
    // reversing the displacement from the moved position undoes the reward exactly
    CHECK(alt_reward_raw(fwd, prev, enemies, enemies) == doctest::Approx(-alt_reward_raw(prev, fwd, enemies, enemies)));
  }
}

TEST_CASE("alternative reward on worlds is normalized by the full step") {
  auto prev = hf::testing::flat_world(20, 20);
  hf::testing::add_unit(prev, hf::combat::Team::Ally, hf::combat::Archetype::Marine, 1.5, 1.5);
  hf::testing::add_unit(prev, hf::combat::Team::Ally, hf::combat::Archetype::Marine, 1.5, 5.5);
  hf::testing::add_unit(prev, hf::combat::Team::Enemy, hf::combat::Archetype::Marine, 15.5, 1.5);
  auto cur = prev;
  cur.units[0].pos.x += 1.0;
  CHECK(alt_reward_scale(cur) == 2.0);
  CHECK(alt_reward(prev, cur) == doctest::Approx(0.5));

  // An agent's death is never paid: only agents alive now are counted.
  auto fallen = cur;
  fallen.units[1].alive = false;
  CHECK(alt_reward(prev, fallen) == doctest::Approx(0.5));

  // The last enemy leaving drops the potential to zero.
  auto cleared = prev;
  cleared.units[2].alive = false;
  CHECK(alt_reward(prev, cleared) == doctest::Approx((14.0 + std::hypot(14.0, 4.0)) / 2.0));
}

TEST_CASE("alternative reward averages over the enemies present at each tick") {
  const std::vector<Vec2> agents = {{0, 0}};
  const std::vector<Vec2> both = {{2, 0}, {10, 0}}, far_only = {{10, 0}}, near_only = {{2, 0}};
  // Removing the near enemy raises the average distance; removing the far one lowers it.
  CHECK(alt_reward_raw(agents, agents, both, far_only) == doctest::Approx(6.0 - 10.0));
  CHECK(alt_reward_raw(agents, agents, both, near_only) == doctest::Approx(6.0 - 2.0));
  CHECK(alt_reward_raw(agents, agents, both, {}) == doctest::Approx(6.0));
}

TEST_CASE("reward schedules") {
  RewardConfig cfg;
  cfg.schedule = AltSchedule::Switch;
  cfg.switch_at = 100000;
  CHECK(schedule_reward(3.0, 7.0, 50000, cfg) == 7.0);
  CHECK(schedule_reward(3.0, 7.0, 99999, cfg) == 7.0);
  CHECK(schedule_reward(3.0, 7.0, 100000, cfg) == 3.0);
  cfg.schedule = AltSchedule::Blend;
  CHECK(schedule_reward(3.0, 7.0, 0, cfg) == doctest::Approx(0.2 * 7 + 0.8 * 3));
  cfg.schedule = AltSchedule::None;
  CHECK(schedule_reward(3.0, 7.0, 0, cfg) == 3.0);
}
