#include <benchmark/benchmark.h>

#include <random>

#include "hillfight/harness/env.hpp"
#include "hillfight/harness/rollout.hpp"
#include "hillfight/learners/learner.hpp"
#include "hillfight/perception/perception.hpp"
#include "hillfight/replay/episode.hpp"
#include "hillfight/scenario/scenario.hpp"

using namespace hf;

namespace {

const char* const kScenarios[] = {"smoke_3v2", "def_infantry", "off_superhard"};

// Ticks of the engine under the focus-fire script, resetting at episode end.
void BM_EnvStep(benchmark::State& state) {
  harness::Env env(scenario::load_scenario(kScenarios[state.range(0)]), {}, {});
  harness::FocusFirePolicy policy;
  std::mt19937_64 rng(1);
  std::uint64_t seed = 0;
  env.reset(seed);
  for (auto _ : state) {
    const auto out = env.step(policy.act(env, 0.0, false, rng), 0);
    if (out.done) env.reset(++seed);
  }
  state.SetLabel(kScenarios[state.range(0)]);
}
BENCHMARK(BM_EnvStep)->DenseRange(0, 2);

void BM_Observe(benchmark::State& state) {
  const auto world = scenario::instantiate(scenario::load_scenario(kScenarios[state.range(0)]), 1);
  for (auto _ : state) {
    const auto vis = perception::shared_visibility(world);
    const auto obs = perception::observe_all(world, vis);
    benchmark::DoNotOptimize(perception::global_state(world, obs));
  }
  state.SetLabel(kScenarios[state.range(0)]);
}
BENCHMARK(BM_Observe)->DenseRange(0, 2);

// Records `count` focus-fire episodes on smoke_3v2.
std::vector<replay::EpisodeRecord> smoke_episodes(std::size_t count, harness::Env& env) {
  harness::FocusFirePolicy policy;
  std::vector<replay::EpisodeRecord> out;
  for (std::size_t e = 0; e < count; ++e) out.push_back(harness::run_episode(env, policy, e, e, {}).record);
  return out;
}

void BM_ReplaySample(benchmark::State& state) {
  harness::Env env(scenario::load_scenario("smoke_3v2"), {}, {});
  replay::ReplayBuffer buffer(256);
  for (auto& e : smoke_episodes(256, env)) buffer.push(std::move(e));
  std::mt19937_64 rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(buffer.sample(32, rng));
}
BENCHMARK(BM_ReplaySample);

// One learner update on a batch of 8 smoke episodes, hidden width 32.
void BM_LearnerUpdate(benchmark::State& state) {
  const auto algo = learners::all_algorithms()[state.range(0)];
  harness::Env env(scenario::load_scenario("smoke_3v2"), {}, {});
  const auto episodes = smoke_episodes(8, env);
  std::vector<const replay::EpisodeRecord*> ptrs;
  for (const auto& e : episodes) ptrs.push_back(&e);
  const auto batch = replay::pad_batch(ptrs);
  learners::LearnerConfig config;
  config.hidden = 32;
  auto learner = learners::make_learner(algo, env.info(), config, 3);
  std::mt19937_64 rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(learner->train(batch, rng));
  state.SetLabel(std::string(learners::to_string(algo)));
}
BENCHMARK(BM_LearnerUpdate)->DenseRange(0, static_cast<int>(learners::all_algorithms().size()) - 1)
    ->Unit(benchmark::kMillisecond);

void BM_ControllerAct(benchmark::State& state) {
  harness::Env env(scenario::load_scenario("off_superhard"), {}, {});
  env.reset(1);
  learners::LearnerConfig config;
  auto learner = learners::make_learner(learners::Algorithm::Qmix, env.info(), config, 5);
  auto controller = learner->make_controller();
  std::mt19937_64 rng(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(controller.act(env.observations(), env.available(), 0.05, true, rng));
  }
}
BENCHMARK(BM_ControllerAct);

}  // namespace

BENCHMARK_MAIN();
