#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "hillfight/autodiff/checkpoint.hpp"
#include "hillfight/combat/replay.hpp"
#include "hillfight/harness/channel.hpp"
#include "hillfight/harness/config.hpp"
#include "hillfight/harness/heatmap.hpp"
#include "hillfight/harness/train.hpp"

using namespace hf;
using namespace hf::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hillfight_test_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig tiny(const std::string& name) {
  RunConfig c;
  c.scenario = "smoke_3v2";
  c.algorithm = learners::Algorithm::Vdn;
  c.total_steps = 400;
  c.eval_interval = 200;
  c.eval_episodes = 2;
  c.batch_size = 4;
  c.buffer_size = 16;
  c.target_update = 3;
  c.learner.hidden = 8;
  c.learner.mixer_embed = 4;
  c.learner.critic_hidden = 8;
  c.learner.n_quantiles = 4;
  c.learner.quantile_embed = 4;
  c.output_dir = scratch(name).string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("run config defaults follow the training table") {
  const RunConfig c;
  CHECK(c.total_steps == 10050000);
  CHECK(c.learner.gamma == 0.99);
  CHECK(c.learner.optimizer.lr == 5e-4);
  CHECK(c.target_update == 200);
  CHECK(c.buffer_size == 5000);
  CHECK(c.batch_size == 32);
  CHECK(c.learner.n_quantiles == 32);
  CHECK(c.epsilon.start == 1.0);
  CHECK(c.epsilon.end == 0.05);
  CHECK(c.epsilon.anneal_steps == 50000);
  CHECK(c.eval_interval == 10000);
  CHECK(c.resolved_runners() == 1);
  CHECK(c.resolved_eval_episodes() == 32);
  RunConfig p;
  p.mode = replay::BufferMode::Parallel;
  CHECK(p.resolved_runners() == 20);
  CHECK(p.resolved_eval_episodes() == 20);
  CHECK(p.resolved_update_interval() == 20);
  CHECK(c.resolved_update_interval() == 1);
  CHECK(check(c).empty());
}

TEST_CASE("config text round-trips and rejects unknown keys") {
  RunConfig c = tiny("cfg");
  c.algorithm = learners::Algorithm::Drima;
  c.learner.risk.env = {0.1, 0.4};
  c.reward.schedule = reward::AltSchedule::Blend;
  c.epsilon.kind = replay::EpsilonKind::Piecewise;
  c.perception.comm_mode = perception::CommMode::SinglePass;
  const std::string text = to_text(c);
  const RunConfig back = parse_config(text);
  CHECK(to_text(back) == text);
  CHECK(back.algorithm == learners::Algorithm::Drima);
  CHECK(back.learner.risk.env.lower == 0.1);
  CHECK(back.learner.risk.agent.lower == learners::kRiskSeeking.lower);
  CHECK(config_keys().size() == static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));

  CHECK_THROWS_AS(parse_config("no.such.key = 1"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\nseed = 2"), ConfigError);
  CHECK_THROWS_AS(parse_config("train.batch_size = many"), ConfigError);
  CHECK_THROWS_AS(parse_config("just words"), ConfigError);
  CHECK_THROWS_AS(parse_config("algorithm = dqn"), ConfigError);

  const RunConfig parsed = parse_config("# comment\n\ntrain.lr = 0.001  # trailing\nepsilon.knots = 0:1,100:0.5\n");
  CHECK(parsed.learner.optimizer.lr == 0.001);
  REQUIRE(parsed.epsilon.knots.size() == 2);
  CHECK(parsed.epsilon.knots[1] == std::pair<std::int64_t, double>{100, 0.5});

  for (const char* alpha : {"0.01", "0.1", "0.5", "0.9"}) {
    RunConfig m;
    set_key(m, "masac.alpha", alpha);
    CHECK(check(m).empty());
    CHECK(get_key(m, "masac.alpha") == alpha);
  }
  RunConfig bad;
  bad.buffer_size = 2;
  bad.batch_size = 4;
  CHECK_FALSE(check(bad).empty());
}

TEST_CASE("derived seeds separate streams and indices") {
  std::set<std::uint64_t> seen;
  for (auto s : {SeedStream::TrainWorld, SeedStream::TrainActions, SeedStream::EvalWorld}) {
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(7, s, i));
  }
  CHECK(seen.size() == 300);
  CHECK(derive_seed(7, SeedStream::EvalWorld, 3) == derive_seed(7, SeedStream::EvalWorld, 3));
  CHECK(derive_seed(7, SeedStream::EvalWorld, 3) != derive_seed(8, SeedStream::EvalWorld, 3));
}

TEST_CASE("environment exposes consistent dimensions and rejects unavailable actions") {
  Env env(scenario::load_scenario("smoke_3v2"), {}, {});
  const auto& info = env.info();
  CHECK(info.n_agents == 3);
  CHECK(info.n_actions == combat::kBasicActionCount + 2);
  REQUIRE(env.observations().size() == 3);
  CHECK(env.observations()[0].size() == info.obs_dim);
  CHECK(env.state().size() == info.state_dim);
  CHECK(env.available()[0].size() == info.n_actions);
  CHECK_THROWS_AS(env.step({combat::kNoop, combat::kStop, combat::kStop}, 0), combat::ContractViolation);

  // Moving east toward the enemies earns only the alternative reward while it is switched on.
  reward::RewardConfig rc;
  rc.schedule = reward::AltSchedule::Switch;
  rc.switch_at = 10;
  Env shaped(scenario::load_scenario("smoke_3v2"), {}, rc);
  const std::vector<int> west = {combat::kWest, combat::kWest, combat::kWest};
  const std::vector<int> east = {combat::kStop, combat::kStop, combat::kEast};
  shaped.reset(1);
  CHECK(shaped.step(west, 0).reward < 0.0);
  shaped.reset(1);
  CHECK(shaped.step(east, 0).reward > 0.0);
  shaped.reset(1);
  CHECK(shaped.step(west, 10).reward == 0.0);
}

TEST_CASE("focus fire wins every smoke episode") {
  Env env(scenario::load_scenario("smoke_3v2"), {}, {});
  FocusFirePolicy policy;
  const auto result = evaluate_policy(env, policy, 32, 11, false);
  CHECK(result.wins == 32);
  CHECK(result.win_rate == 1.0);
}

TEST_CASE("an untrained policy does not win off_distant") {
  Env env(scenario::load_scenario("off_distant"), {}, {});
  learners::LearnerConfig lc;
  lc.hidden = 16;
  lc.mixer_embed = 8;
  auto learner = learners::make_learner(learners::Algorithm::Qmix, env.info(), lc, 5);
  ControllerPolicy policy(learner->make_controller());
  CHECK(evaluate_policy(env, policy, 10, 3, false).win_rate <= 0.1);
  RandomPolicy random;
  CHECK(evaluate_policy(env, random, 10, 3, false).win_rate <= 0.1);
}

TEST_CASE("evaluation requires episodes") {
  Env env(scenario::load_scenario("smoke_3v2"), {}, {});
  FocusFirePolicy policy;
  CHECK_THROWS_AS(evaluate_policy(env, policy, 0, 1, false), std::invalid_argument);
}

TEST_CASE("zero-step training writes empty metrics and the initial parameters") {
  RunConfig c = tiny("zero");
  c.total_steps = 0;
  const auto out = train(c);
  CHECK(out.metrics.rows.empty());
  CHECK_FALSE(out.metrics.final_winrate.has_value());
  CHECK(slurp(fs::path(c.output_dir) / "metrics.csv") == std::string(kMetricsHeader) + "\n");
  REQUIRE(fs::exists(out.checkpoint));
  REQUIRE(fs::exists(out.checkpoint.string() + ".cfg"));

  Env env(scenario::load_scenario(c.scenario), c.perception, c.reward);
  auto fresh = learners::make_learner(c.algorithm, env.info(), c.learner,
                                      derive_seed(c.seed, SeedStream::LearnerInit, 0));
  const auto expected = fresh->export_parameters();
  const auto saved = ad::load_checkpoint(out.checkpoint);
  REQUIRE(saved.size() == expected.size());
  for (std::size_t i = 0; i < saved.size(); ++i) {
    CHECK(saved[i].name == expected[i].name);
    CHECK(saved[i].tensor == expected[i].tensor);
  }
}

TEST_CASE("episodic training is bitwise reproducible and honours the cadence") {
  RunConfig c = tiny("det_a");
  const auto a = train(c);
  const std::string metrics_a = slurp(fs::path(c.output_dir) / "metrics.csv");
  const std::string ckpt_a = slurp(a.checkpoint);
  c.output_dir = scratch("det_b").string();
  const auto b = train(c);
  CHECK(metrics_a == slurp(fs::path(c.output_dir) / "metrics.csv"));
  CHECK(ckpt_a == slurp(b.checkpoint));

  const auto& m = a.metrics;
  CHECK(m.env_steps >= c.total_steps);
  // One update per episode once the buffer can fill a batch.
  CHECK(m.updates == m.episodes - static_cast<std::int64_t>(c.batch_size) + 1);
  REQUIRE(m.rows.size() == static_cast<std::size_t>(m.env_steps / c.eval_interval) + 1);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    CHECK(m.rows[i].step == static_cast<std::int64_t>(i) * c.eval_interval);
    CHECK(m.rows[i].eval_winrate >= 0.0);
    CHECK(m.rows[i].eval_winrate <= 1.0);
    if (i > 0) CHECK(m.rows[i].episodes >= m.rows[i - 1].episodes);
  }
  CHECK(std::isnan(m.rows[0].train_return));
  CHECK(m.final_winrate == m.rows.back().eval_winrate);

  std::ifstream in(fs::path(c.output_dir) / "metrics.csv");
  const auto rows = read_metrics(in);
  REQUIRE(rows.size() == m.rows.size());
  CHECK(rows.back().step == m.rows.back().step);
  CHECK(rows.back().loss == doctest::Approx(m.rows.back().loss));

  // A different seed changes the run.
  c.seed = 99;
  c.output_dir = scratch("det_c").string();
  train(c);
  CHECK(metrics_a != slurp(fs::path(c.output_dir) / "metrics.csv"));
}

TEST_CASE("parallel rollout aggregates by worker index") {
  RunConfig c = tiny("par_a");
  c.mode = replay::BufferMode::Parallel;
  c.runners = 3;
  c.update_interval = 3;
  const auto a = train(c);
  CHECK(a.metrics.episodes % 3 == 0);
  // One update per round once the buffer can fill a batch (first possible after round two).
  CHECK(a.metrics.updates == a.metrics.episodes / 3 - 1);
  c.output_dir = scratch("par_b").string();
  const auto b = train(c);
  CHECK(slurp(a.checkpoint) == slurp(b.checkpoint));
  CHECK(slurp(a.checkpoint.parent_path() / "metrics.csv") == slurp(b.checkpoint.parent_path() / "metrics.csv"));
}

TEST_CASE("every algorithm trains through the harness") {
  for (auto algo : learners::all_algorithms()) {
    CAPTURE(learners::to_string(algo));
    RunConfig c = tiny(std::string("algo_") + std::string(learners::to_string(algo)));
    c.algorithm = algo;
    c.total_steps = 200;
    c.eval_interval = 100;
    const auto out = train(c);
    CHECK(out.metrics.updates > 0);
    const auto eval = evaluate_checkpoint(out.checkpoint, "smoke_3v2", 2, 1, false);
    CHECK(eval.episodes == 2);
  }
}

TEST_CASE("a diverging run aborts with a diagnostic snapshot") {
  RunConfig c = tiny("nan");
  c.learner.optimizer.lr = 1e300;
  c.learner.optimizer.grad_clip = 1e300;
  CHECK_THROWS_AS(train(c), TrainingAborted);
  CHECK(fs::exists(fs::path(c.output_dir) / "nan_snapshot" / "diagnostic.txt"));
  CHECK(fs::exists(fs::path(c.output_dir) / "nan_snapshot" / "checkpoint.bin"));
}

TEST_CASE("checkpoint evaluation checks scenario dimensions") {
  RunConfig c = tiny("mismatch");
  c.total_steps = 0;
  const auto out = train(c);
  CHECK_THROWS_AS(evaluate_checkpoint(out.checkpoint, "def_infantry", 1, 1, false), ad::CheckpointError);
  CHECK_THROWS_AS(evaluate_checkpoint(out.checkpoint, "smoke_3v2", 0, 1, false), std::invalid_argument);
  const auto ok = evaluate_checkpoint(out.checkpoint, "smoke_3v2", 2, 1, true);
  CHECK(ok.replays.size() == 2);
  CHECK_FALSE(ok.replays[0].empty());
  fs::remove(out.checkpoint.string() + ".cfg");
  CHECK_THROWS_AS(evaluate_checkpoint(out.checkpoint, "smoke_3v2", 1, 1, false), ad::CheckpointError);
}

TEST_CASE("heat-map of a stationary unit") {
  ReplayLog log;
  const int ticks = 17;
  for (int t = 1; t <= ticks; ++t) {
    combat::ReplayRecord r;
    r.tick = t;
    r.units.push_back({0, combat::Team::Ally, 3.5, 2.5, 10.0, false, combat::kStop});
    r.units.push_back({1, combat::Team::Enemy, 1.5, 1.5, 10.0, false, combat::kStop});
    log.push_back(r);
  }
  const Heatmap map = build_heatmap({log}, 6, 4);
  CHECK(map.at(3, 2) == ticks);
  CHECK(map.total() == ticks);
  const auto d = map.density();
  CHECK(d[2 * 6 + 3] == 1.0);

  const Heatmap empty = build_heatmap({}, 5, 3);
  CHECK(empty.total() == 0);
  for (double v : empty.density()) CHECK(v == 0.0);
  std::ostringstream csv;
  write_counts_csv(csv, empty);
  CHECK(csv.str() == "0,0,0,0,0\n0,0,0,0,0\n0,0,0,0,0\n");
}

TEST_CASE("heat-map mass equals living-ally ticks") {
  // Oracle: count living allies straight from the world after every step.
  Env env(scenario::load_scenario("smoke_3v2"), {}, {});
  RandomPolicy policy;
  std::mt19937_64 rng(4);
  std::int64_t living_ticks = 0;
  std::vector<ReplayLog> logs;
  const fs::path dir = scratch("heat");
  std::vector<std::vector<std::string>> lines;
  for (int e = 0; e < 5; ++e) {
    env.reset(static_cast<std::uint64_t>(e));
    ReplayLog log;
    std::vector<std::string> text;
    while (true) {
      const auto out = env.step(policy.act(env, 0.0, false, rng), 0);
      for (std::size_t i = 0; i < env.world().n_allies; ++i) living_ticks += env.world().ally(i).alive ? 1 : 0;
      const auto rec = combat::make_replay_record(env.world(), env.last_step());
      text.push_back(combat::to_json_line(rec));
      log.push_back(rec);
      if (out.done) break;
    }
    logs.push_back(std::move(log));
    lines.push_back(std::move(text));
  }
  CHECK(build_heatmap(logs, 16, 16).total() == living_ticks);

  write_replays(dir, lines);
  const auto loaded = load_replay_logs(dir);
  REQUIRE(loaded.size() == 5);
  const Heatmap from_disk = build_heatmap(loaded);
  CHECK(from_disk.total() == living_ticks);
  CHECK(from_disk.width <= 16);
  double mass = 0.0;
  for (double v : from_disk.density()) mass += v;
  CHECK(mass == doctest::Approx(1.0));
  CHECK(load_replay_logs(scratch("heat_missing")).empty());
}

TEST_CASE("sweep launches one run per value") {
  RunConfig c = tiny("sweep");
  c.total_steps = 0;
  const std::vector<std::string> values = {"10000", "50000", "100000", "500000", "5000000"};
  const auto runs = sweep(c, "epsilon.anneal", values);
  REQUIRE(runs.size() == 5);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    CHECK(fs::exists(runs[i].checkpoint));
    const RunConfig saved = load_config(runs[i].checkpoint.string() + ".cfg");
    CHECK(std::to_string(saved.epsilon.anneal_steps) == values[i]);
  }
  CHECK_THROWS_AS(sweep(c, "epsilon.bogus", {"1"}), ConfigError);
}

TEST_CASE("bounded channel blocks producers and drains after close") {
  Channel<int> ch(2);
  std::thread producer([&] {
    for (int i = 0; i < 5; ++i) ch.send(i);
    ch.close();
  });
  std::vector<int> got;
  while (auto v = ch.receive()) got.push_back(*v);
  producer.join();
  CHECK(got == std::vector<int>{0, 1, 2, 3, 4});
  CHECK_FALSE(ch.send(9));
}
