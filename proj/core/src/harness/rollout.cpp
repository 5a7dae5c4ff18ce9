#include "hillfight/harness/rollout.hpp"

#include <limits>

#include "hillfight/combat/replay.hpp"

namespace hf::harness {

std::uint64_t derive_seed(std::uint64_t run_seed, SeedStream stream, std::uint64_t index) {
  std::uint64_t z = run_seed ^ (static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL);
  z += (index + 1) * 0xD1B54A32D192ED03ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<int> ControllerPolicy::act(const Env& env, double epsilon, bool explore, std::mt19937_64& rng) {
  return controller_.act(env.observations(), env.available(), epsilon, explore, rng);
}

std::vector<int> FocusFirePolicy::act(const Env& env, double, bool, std::mt19937_64&) {
  const auto& world = env.world();
  const std::size_t ne = world.n_enemies();
  std::vector<int> actions(world.n_allies, combat::kStop);
  for (std::size_t i = 0; i < world.n_allies; ++i) {
    const auto& avail = env.available()[i];
    const auto& me = world.ally(i);
    if (!me.alive) {
      actions[i] = combat::kNoop;
      continue;
    }
    int best = -1;
    double best_health = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ne; ++k) {
      const int a = static_cast<int>(combat::kBasicActionCount + k);
      if (avail[a] && world.enemy(k).health < best_health) {
        best_health = world.enemy(k).health;
        best = a;
      }
    }
    if (best >= 0) {
      actions[i] = best;
      continue;
    }
    double nearest = std::numeric_limits<double>::infinity();
    combat::Vec2 goal = me.pos;
    for (std::size_t k = 0; k < ne; ++k) {
      const auto& e = world.enemy(k);
      if (e.alive && combat::distance(me.pos, e.pos) < nearest) {
        nearest = combat::distance(me.pos, e.pos);
        goal = e.pos;
      }
    }
    // Best distance change among available moves into free cells; a
    // sidestep is allowed when the direct path is blocked.
    double best_gain = -std::numeric_limits<double>::infinity();
    for (int a : {combat::kNorth, combat::kSouth, combat::kEast, combat::kWest}) {
      if (!avail[a]) continue;
      const combat::Vec2 dest = me.pos + combat::move_direction(a) * world.spec(me).move_step;
      bool blocked = false;
      for (const auto& other : world.units) {
        if (other.alive && other.id != me.id && combat::cell_of(other.pos) == combat::cell_of(dest)) blocked = true;
      }
      if (blocked) continue;
      const double gain = nearest - combat::distance(dest, goal);
      if (gain > best_gain + 1e-12) {
        best_gain = gain;
        actions[i] = a;
      }
    }
  }
  return actions;
}

std::vector<int> RandomPolicy::act(const Env& env, double, bool, std::mt19937_64& rng) {
  std::vector<int> actions;
  for (const auto& avail : env.available()) {
    std::vector<int> options;
    for (std::size_t a = 0; a < avail.size(); ++a) {
      if (avail[a]) options.push_back(static_cast<int>(a));
    }
    actions.push_back(options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)]);
  }
  return actions;
}

EpisodeResult run_episode(Env& env, Policy& policy, std::uint64_t world_seed, std::uint64_t action_seed,
                          const RolloutOptions& options) {
  env.reset(world_seed);
  policy.begin_episode();
  std::mt19937_64 rng(action_seed);
  const auto& info = env.info();
  EpisodeResult result;
  result.record = replay::EpisodeRecord(info.n_agents, info.obs_dim, info.state_dim, info.n_actions);
  std::int64_t step = options.global_step;
  while (true) {
    result.record.push_snapshot(env.observations(), env.state(), env.available());
    const double eps = options.explore ? options.epsilon(step) : 0.0;
    const std::vector<int> actions = policy.act(env, eps, options.explore, rng);
    const StepOutcome out = env.step(actions, step);
    ++step;
    result.record.push_transition(actions, out.reward, out.terminal);
    result.episode_return += out.reward;
    if (options.record_replay) {
      result.replay_lines.push_back(combat::to_json_line(combat::make_replay_record(env.world(), env.last_step())));
    }
    if (out.done) {
      result.outcome = out.outcome;
      break;
    }
  }
  result.record.push_snapshot(env.observations(), env.state(), env.available());
  return result;
}

}  // namespace hf::harness
