#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hillfight/harness/env.hpp"
#include "hillfight/learners/learner.hpp"
#include "hillfight/replay/episode.hpp"

namespace hf::harness {

/// Stream tags for derive_seed.
enum class SeedStream : std::uint64_t { TrainWorld = 1, TrainActions, EvalWorld, EvalActions, LearnerInit, LearnerSample };

/// Independent 64-bit seed for item `index` of `stream` under a run seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t run_seed, SeedStream stream, std::uint64_t index);

/// Chooses one action per agent from what the environment exposes.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode() {}
  virtual std::vector<int> act(const Env& env, double epsilon, bool explore, std::mt19937_64& rng) = 0;
};

/// Decentralized learned policy: local observations and availability only.
class ControllerPolicy final : public Policy {
 public:
  explicit ControllerPolicy(learners::Controller controller) : controller_(std::move(controller)) {}
  void begin_episode() override { controller_.reset(); }
  std::vector<int> act(const Env& env, double epsilon, bool explore, std::mt19937_64& rng) override;
  learners::Controller& controller() noexcept { return controller_; }

 private:
  learners::Controller controller_;
};

/// Scripted oracle: every agent shoots the weakest enemy it may attack
/// (ties to the lowest id), otherwise walks toward the nearest living enemy.
class FocusFirePolicy final : public Policy {
 public:
  std::vector<int> act(const Env& env, double epsilon, bool explore, std::mt19937_64& rng) override;
};

/// Uniform over available actions.
class RandomPolicy final : public Policy {
 public:
  std::vector<int> act(const Env& env, double epsilon, bool explore, std::mt19937_64& rng) override;
};

struct RolloutOptions {
  std::int64_t global_step = 0;  // env steps taken before this episode
  /// Exploration rate as a function of the global env step.
  std::function<double(std::int64_t)> epsilon = [](std::int64_t) { return 0.0; };
  bool explore = false;
  bool record_replay = false;
};

struct EpisodeResult {
  replay::EpisodeRecord record;
  combat::Outcome outcome = combat::Outcome::Ongoing;
  double episode_return = 0.0;
  /// One JSON line per tick when requested.
  std::vector<std::string> replay_lines;
};

/// Runs one episode from `env.reset(world_seed)` to its end.
EpisodeResult run_episode(Env& env, Policy& policy, std::uint64_t world_seed, std::uint64_t action_seed,
                          const RolloutOptions& options);

}  // namespace hf::harness
