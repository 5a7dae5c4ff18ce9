#include "hillfight/harness/env.hpp"

namespace hf::harness {

learners::EnvInfo env_info(const scenario::Scenario& scenario, perception::StateMode mode) {
  const std::size_t n = scenario::roster_size(scenario.allies);
  const std::size_t e = scenario::roster_size(scenario.enemies);
  const std::size_t b = scenario.buildings.size();
  return {n, perception::observation_size(n, e, b), perception::state_size(n, e, b, mode),
          combat::action_space_size(e, b)};
}

Env::Env(scenario::Scenario scenario, perception::PerceptionConfig perception, reward::RewardConfig reward)
    : scenario_(std::move(scenario)),
      perception_(perception),
      reward_(reward),
      info_(env_info(scenario_, perception.state_mode)) {
  reset(0);
}

void Env::reset(std::uint64_t seed) {
  world_ = scenario::instantiate(scenario_, seed);
  last_ = {};
  normalizer_ = reward::flawless_return(world_, reward_);
  refresh();
}

void Env::refresh() {
  const auto vis = perception::shared_visibility(world_, perception_);
  obs_ = perception::observe_all(world_, vis);
  state_ = perception::global_state(world_, obs_, perception_.state_mode);
  avail_.resize(world_.n_allies);
  for (std::size_t i = 0; i < world_.n_allies; ++i) avail_[i] = perception::available_actions(world_, vis, i);
}

StepOutcome Env::step(const std::vector<int>& actions, std::int64_t global_step) {
  for (std::size_t i = 0; i < actions.size() && i < avail_.size(); ++i) {
    const int a = actions[i];
    if (a < 0 || static_cast<std::size_t>(a) >= avail_[i].size() || !avail_[i][a]) {
      throw combat::ContractViolation("action " + std::to_string(a) + " unavailable to agent " + std::to_string(i));
    }
  }
  const bool use_alt = reward_.schedule != reward::AltSchedule::None;
  combat::WorldState prev;
  if (use_alt) prev = world_;
  last_ = combat::step(world_, actions);
  StepOutcome out;
  out.outcome = combat::outcome(world_);
  const double base =
      reward::base_reward(last_.events, world_.n_allies, out.outcome == combat::Outcome::Win, reward_, normalizer_);
  const double alt = use_alt ? reward::alt_reward(prev, world_) : 0.0;
  out.reward = reward::schedule_reward(base, alt, global_step, reward_);
  out.terminal = out.outcome == combat::Outcome::Win || out.outcome == combat::Outcome::Loss;
  out.done = out.outcome != combat::Outcome::Ongoing;
  refresh();
  return out;
}

}  // namespace hf::harness
