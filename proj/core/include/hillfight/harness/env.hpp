#pragma once

#include <cstdint>
#include <vector>

#include "hillfight/combat/engine.hpp"
#include "hillfight/learners/learner.hpp"
#include "hillfight/perception/perception.hpp"
#include "hillfight/reward/reward.hpp"
#include "hillfight/scenario/scenario.hpp"

namespace hf::harness {

struct StepOutcome {
  double reward = 0.0;
  /// The episode ended by win or loss (no bootstrap).
  bool terminal = false;
  /// The episode ended for any reason, including the time limit.
  bool done = false;
  combat::Outcome outcome = combat::Outcome::Ongoing;
};

/// One scenario instance seen through the agents' eyes: shared visibility,
/// observations, global state, available actions and the scheduled reward.
class Env {
 public:
  Env(scenario::Scenario scenario, perception::PerceptionConfig perception, reward::RewardConfig reward);

  const learners::EnvInfo& info() const noexcept { return info_; }
  const scenario::Scenario& scenario() const noexcept { return scenario_; }

  void reset(std::uint64_t seed);
  /// `global_step` selects the reward schedule phase.
  StepOutcome step(const std::vector<int>& actions, std::int64_t global_step);

  const combat::WorldState& world() const noexcept { return world_; }
  const combat::StepResult& last_step() const noexcept { return last_; }
  const std::vector<std::vector<double>>& observations() const noexcept { return obs_; }
  const std::vector<double>& state() const noexcept { return state_; }
  const std::vector<std::vector<std::uint8_t>>& available() const noexcept { return avail_; }

 private:
  void refresh();

  scenario::Scenario scenario_;
  perception::PerceptionConfig perception_;
  reward::RewardConfig reward_;
  learners::EnvInfo info_;
  combat::WorldState world_;
  combat::StepResult last_;
  double normalizer_ = 1.0;
  std::vector<std::vector<double>> obs_;
  std::vector<double> state_;
  std::vector<std::vector<std::uint8_t>> avail_;
};

learners::EnvInfo env_info(const scenario::Scenario& scenario, perception::StateMode mode);

}  // namespace hf::harness
