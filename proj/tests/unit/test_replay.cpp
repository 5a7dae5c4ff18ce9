#include <doctest.h>

#include <random>
#include <set>

#include "hillfight/replay/episode.hpp"
#include "hillfight/replay/schedule.hpp"

using namespace hf::replay;

namespace {

EpisodeRecord make_episode(std::size_t length, double tag) {
  EpisodeRecord e(2, 3, 4, 5);
  for (std::size_t t = 0; t <= length; ++t) {
    std::vector<std::vector<double>> obs(2, std::vector<double>(3, tag + t));
    std::vector<std::vector<std::uint8_t>> avail(2, std::vector<std::uint8_t>(5, 1));
    avail[1][t % 5] = 0;
    e.push_snapshot(obs, std::vector<double>(4, -tag - t), avail);
    if (t < length) e.push_transition({static_cast<int>(t % 5), 1}, tag, t + 1 == length);
  }
  return e;
}

}  // namespace

TEST_CASE("episode records keep their shape") {
  const auto e = make_episode(4, 1.0);
  CHECK(e.consistent());
  CHECK(e.length == 4);
  CHECK(e.episode_return() == 4.0);
  EpisodeRecord bad(2, 3, 4, 5);
  CHECK_THROWS(bad.push_snapshot({{1, 2, 3}}, {0, 0, 0, 0}, {{1, 1, 1, 1, 1}}));
}

TEST_CASE("FIFO eviction at capacity") {
  ReplayBuffer buf(5000);
  for (int i = 0; i < 5001; ++i) {
    EpisodeRecord e(1, 1, 1, 1);
    e.rewards.push_back(i);  // tag only; shape checks are not needed here
    buf.push(std::move(e));
  }
  CHECK(buf.size() == 5000);
  CHECK(buf.inserted() == 5001);
  CHECK(buf.at(0).rewards[0] == 1);
  CHECK(buf.at(4999).rewards[0] == 5000);
}

TEST_CASE("sampling is without replacement and seeded") {
  ReplayBuffer buf(100);
  for (int i = 0; i < 40; ++i) buf.push(make_episode(1 + i % 7, i));
  std::mt19937_64 r1(9), r2(9);
  const auto a = buf.sample_indices(32, r1);
  const auto b = buf.sample_indices(32, r2);
  REQUIRE(a);
  CHECK(*a == *b);
  CHECK(std::set<std::size_t>(a->begin(), a->end()).size() == 32);

  ReplayBuffer small(10);
  small.push(make_episode(2, 0));
  std::mt19937_64 r3(1);
  CHECK_FALSE(small.sample(32, r3).has_value());
}

TEST_CASE("padding round trip") {
  std::vector<EpisodeRecord> eps = {make_episode(3, 1), make_episode(7, 2), make_episode(1, 3)};
  std::vector<const EpisodeRecord*> ptrs;
  for (auto& e : eps) ptrs.push_back(&e);
  const auto batch = pad_batch(ptrs);
  CHECK(batch.max_length == 7);
  for (std::size_t b = 0; b < 3; ++b) {
    CHECK(unpad(batch, b) == eps[b]);
    for (std::size_t t = 0; t < 7; ++t) CHECK(batch.filled_at(b, t) == (t < eps[b].length));
  }
  CHECK(batch.obs_at(1, 2, 1)[0] == 4.0);
  CHECK(batch.state_at(2, 1)[0] == -4.0);
  CHECK(batch.action_at(1, 3, 0) == 3);
}

TEST_CASE("epsilon schedules") {
  EpsilonSchedule lin;
  CHECK(lin.value(0) == 1.0);
  CHECK(lin.value(25000) == doctest::Approx(0.525));
  CHECK(lin.value(50000) == 0.05);
  CHECK(lin.value(10000000) == 0.05);

  EpsilonSchedule pw;
  pw.kind = EpsilonKind::Piecewise;
  CHECK(pw.value(0) == 1.0);
  CHECK(pw.value(10000) == doctest::Approx(0.1));
  CHECK(pw.value(30000) == doctest::Approx(0.075));
  CHECK(pw.value(50000) == doctest::Approx(0.05));
  CHECK(pw.value(90000) == doctest::Approx(0.05));

  EpsilonSchedule ex;
  ex.kind = EpsilonKind::Exponential;
  CHECK(ex.value(0) == doctest::Approx(1.0));
  CHECK(ex.value(50000) == doctest::Approx(0.06));
  CHECK(ex.problems().empty());

  pw.knots = {{0, 0.5}, {10, 0.7}};
  CHECK_FALSE(pw.problems().empty());
}

TEST_CASE("update cadence") {
  CHECK(update_cadence(BufferMode::Episodic) == UpdateCadence{1, 200});
  CHECK(update_cadence(BufferMode::Parallel) == UpdateCadence{20, 200});
  CHECK(default_runners(BufferMode::Parallel) == 20);
  // With equal episode lengths the episodic buffer performs 20x the updates.
  const int episodes = 80000;
  CHECK(episodes / update_cadence(BufferMode::Episodic).behavior_interval ==
        20 * (episodes / update_cadence(BufferMode::Parallel).behavior_interval));
}
