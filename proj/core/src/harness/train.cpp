#include "hillfight/harness/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "hillfight/autodiff/checkpoint.hpp"
#include "hillfight/harness/channel.hpp"

namespace hf::harness {
namespace {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

std::string format_field(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Mean {
  double sum = 0.0;
  std::int64_t count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  double take() {
    const double m = count ? sum / static_cast<double>(count) : kAbsent;
    *this = {};
    return m;
  }
};

void save_with_sidecar(const std::filesystem::path& path, const learners::Learner& learner, const RunConfig& config) {
  ad::save_checkpoint(path, learner.export_parameters());
  std::ofstream(path.string() + ".cfg") << to_text(config);
}

std::string outcome_counts(const RunMetrics& m) {
  return "env_steps=" + std::to_string(m.env_steps) + " episodes=" + std::to_string(m.episodes) +
         " updates=" + std::to_string(m.updates);
}

struct Job {
  std::uint64_t episode = 0;
  std::int64_t global_step = 0;
  double fixed_epsilon = 0.0;  // used when epsilon is indexed by updates
  std::shared_ptr<const ad::ParameterSet> params;
};

struct Finished {
  std::size_t worker = 0;
  EpisodeResult result;
  std::exception_ptr error;
};

/// Parallel rollout: each worker owns one environment and a controller; jobs
/// and parameter snapshots go in over a per-worker inbox, immutable episode
/// records come back over one bounded channel.
class WorkerPool {
 public:
  WorkerPool(const RunConfig& config, const scenario::Scenario& scn, const learners::Learner& learner, int workers)
      : config_(config), results_(static_cast<std::size_t>(workers)) {
    for (int w = 0; w < workers; ++w) inboxes_.push_back(std::make_unique<Channel<Job>>(1));
    for (int w = 0; w < workers; ++w) {
      threads_.emplace_back([this, w, scn, controller = learner.make_controller()]() mutable {
        run(static_cast<std::size_t>(w), Env(scn, config_.perception, config_.reward),
            ControllerPolicy(std::move(controller)));
      });
    }
  }

  ~WorkerPool() {
    for (auto& inbox : inboxes_) inbox->close();
    results_.close();
    for (auto& t : threads_) t.join();
  }

  std::size_t size() const noexcept { return threads_.size(); }

  /// One synchronous round; results ordered by worker index.
  std::vector<EpisodeResult> round(std::uint64_t first_episode, std::int64_t global_step, double fixed_epsilon,
                                   std::shared_ptr<const ad::ParameterSet> params) {
    for (std::size_t w = 0; w < inboxes_.size(); ++w) {
      inboxes_[w]->send(Job{first_episode + w, global_step, fixed_epsilon, params});
    }
    std::vector<Finished> done;
    for (std::size_t w = 0; w < inboxes_.size(); ++w) done.push_back(std::move(*results_.receive()));
    std::sort(done.begin(), done.end(), [](const Finished& a, const Finished& b) { return a.worker < b.worker; });
    std::vector<EpisodeResult> out;
    for (auto& d : done) {
      if (d.error) std::rethrow_exception(d.error);
      out.push_back(std::move(d.result));
    }
    return out;
  }

 private:
  void run(std::size_t worker, Env env, ControllerPolicy policy) {
    const ad::ParameterSet* loaded = nullptr;
    while (auto job = inboxes_[worker]->receive()) {
      Finished f;
      f.worker = worker;
      try {
        if (job->params.get() != loaded) {
          policy.controller().set_params(*job->params);
          loaded = job->params.get();
        }
        RolloutOptions opts;
        opts.global_step = job->global_step;
        opts.explore = true;
        const double fixed = job->fixed_epsilon;
        const RunConfig& cfg = config_;
        opts.epsilon = [&cfg, fixed](std::int64_t step) {
          return cfg.epsilon_index == EpsilonIndex::EnvSteps ? cfg.epsilon.value(step) : fixed;
        };
        f.result = run_episode(env, policy, derive_seed(cfg.seed, SeedStream::TrainWorld, job->episode),
                               derive_seed(cfg.seed, SeedStream::TrainActions, job->episode), opts);
      } catch (...) {
        f.error = std::current_exception();
      }
      // Keep the snapshot alive only as long as a job needs it.
      job->params.reset();
      results_.send(std::move(f));
    }
  }

  const RunConfig& config_;
  std::vector<std::unique_ptr<Channel<Job>>> inboxes_;
  Channel<Finished> results_;
  std::vector<std::thread> threads_;
};

const RunConfig& validated(const RunConfig& config) {
  if (const auto problems = check(config); !problems.empty()) throw ConfigError(problems.front());
  return config;
}

class Trainer {
 public:
  Trainer(const RunConfig& config, const ProgressFn& progress)
      : cfg_(validated(config)),
        progress_(progress),
        scenario_(scenario::load_scenario(config.scenario)),
        env_(scenario_, config.perception, config.reward),
        learner_(learners::make_learner(config.algorithm, env_.info(), config.learner,
                                        derive_seed(config.seed, SeedStream::LearnerInit, 0))),
        buffer_(config.buffer_size),
        sample_rng_(derive_seed(config.seed, SeedStream::LearnerSample, 0)),
        out_dir_(config.output_dir) {}

  TrainOutput run() {
    try {
      return run_loop();
    } catch (const ad::NumericError& e) {
      abort_run(e.what());
    }
  }

 private:
  TrainOutput run_loop() {
    std::filesystem::create_directories(out_dir_);
    metrics_file_.open(out_dir_ / "metrics.csv", std::ios::trunc);
    metrics_file_ << kMetricsHeader << '\n';
    metrics_file_.flush();

    const bool parallel = cfg_.mode == replay::BufferMode::Parallel;
    std::optional<WorkerPool> pool;
    std::optional<ControllerPolicy> behaviour;
    if (metrics_.env_steps < cfg_.total_steps) {
      if (parallel) {
        pool.emplace(cfg_, scenario_, *learner_, cfg_.resolved_runners());
      } else {
        behaviour.emplace(learner_->make_controller());
      }
    }
    auto snapshot = std::make_shared<const ad::ParameterSet>(learner_->agent_params());
    while (metrics_.env_steps < cfg_.total_steps) {
      run_due_evaluations();
      const double fixed_eps = cfg_.epsilon.value(metrics_.updates);
      std::vector<EpisodeResult> results;
      if (parallel) {
        results = pool->round(static_cast<std::uint64_t>(metrics_.episodes), metrics_.env_steps, fixed_eps, snapshot);
      } else {
        RolloutOptions opts;
        opts.global_step = metrics_.env_steps;
        opts.explore = true;
        opts.epsilon = [this, fixed_eps](std::int64_t step) {
          return cfg_.epsilon_index == EpsilonIndex::EnvSteps ? cfg_.epsilon.value(step) : fixed_eps;
        };
        const auto e = static_cast<std::uint64_t>(metrics_.episodes);
        results.push_back(run_episode(env_, *behaviour, derive_seed(cfg_.seed, SeedStream::TrainWorld, e),
                                      derive_seed(cfg_.seed, SeedStream::TrainActions, e), opts));
      }
      if (absorb(std::move(results))) {
        if (parallel) {
          snapshot = std::make_shared<const ad::ParameterSet>(learner_->agent_params());
        } else {
          behaviour->controller().set_params(learner_->agent_params());
        }
      }
    }
    if (cfg_.total_steps > 0) run_due_evaluations();

    TrainOutput out;
    out.checkpoint = out_dir_ / "checkpoint.bin";
    save_with_sidecar(out.checkpoint, *learner_, cfg_);
    out.metrics = metrics_;
    return out;
  }

  /// Buffers finished episodes and runs the updates they make due. True when parameters changed.
  bool absorb(std::vector<EpisodeResult> results) {
    bool updated = false;
    const int interval = cfg_.resolved_update_interval();
    for (auto& r : results) {
      metrics_.env_steps += static_cast<std::int64_t>(r.record.length);
      ++metrics_.episodes;
      train_return_.add(r.episode_return);
      ++since_update_;
      if (learners::is_on_policy(cfg_.algorithm)) recent_.push_back(r.record);
      buffer_.push(std::move(r.record));
    }
    while (since_update_ >= interval) {
      since_update_ -= interval;
      std::optional<replay::EpisodeBatch> batch;
      if (learners::is_on_policy(cfg_.algorithm)) {
        std::vector<const replay::EpisodeRecord*> ptrs;
        for (const auto& r : recent_) ptrs.push_back(&r);
        batch = replay::pad_batch(ptrs);
        recent_.clear();
      } else {
        batch = buffer_.sample(cfg_.batch_size, sample_rng_);
      }
      if (!batch) continue;
      update(*batch);
      updated = true;
    }
    while (metrics_.episodes >= target_mark_ + cfg_.target_update) {
      learner_->update_targets();
      target_mark_ += cfg_.target_update;
    }
    return updated;
  }

  void update(const replay::EpisodeBatch& batch) {
    const auto stats = learner_->train(batch, sample_rng_);
    loss_.add(stats.loss);
    ++metrics_.updates;
  }

  [[noreturn]] void abort_run(const std::string& why) {
    const auto dir = out_dir_ / "nan_snapshot";
    std::filesystem::create_directories(dir);
    {
      std::ofstream diag(dir / "diagnostic.txt");
      diag << "reason: " << why << "\n" << outcome_counts(metrics_) << "\n\n" << to_text(cfg_);
    }
    save_with_sidecar(dir / "checkpoint.bin", *learner_, cfg_);
    throw TrainingAborted("training aborted (" + why + ") at " + outcome_counts(metrics_) + "; snapshot in " +
                          dir.string());
  }

  void run_due_evaluations() {
    while (next_eval_ <= metrics_.env_steps) {
      ControllerPolicy policy(learner_->make_controller());
      const auto result = evaluate_policy(env_, policy, cfg_.resolved_eval_episodes(), cfg_.seed, cfg_.save_replays);
      if (cfg_.save_replays) {
        write_replays(out_dir_ / "replays" / ("step_" + std::to_string(next_eval_)), result.replays);
      }
      MetricsRow row{next_eval_, metrics_.episodes, train_return_.take(), result.win_rate, loss_.take()};
      metrics_.rows.push_back(row);
      metrics_.final_winrate = result.win_rate;
      metrics_file_ << row.step << ',' << row.episodes << ',' << format_field(row.train_return) << ','
                    << format_field(row.eval_winrate) << ',' << format_field(row.loss) << '\n';
      metrics_file_.flush();
      if (progress_) progress_(row);
      next_eval_ += cfg_.eval_interval;
    }
  }

  const RunConfig& cfg_;
  const ProgressFn& progress_;
  scenario::Scenario scenario_;
  Env env_;
  std::unique_ptr<learners::Learner> learner_;
  replay::ReplayBuffer buffer_;
  std::mt19937_64 sample_rng_;
  std::filesystem::path out_dir_;
  std::ofstream metrics_file_;
  RunMetrics metrics_;
  Mean train_return_;
  Mean loss_;
  std::vector<replay::EpisodeRecord> recent_;
  std::int64_t since_update_ = 0;
  std::int64_t target_mark_ = 0;
  std::int64_t next_eval_ = 0;
};

}  // namespace

void write_metrics(std::ostream& out, const RunMetrics& metrics) {
  out << kMetricsHeader << '\n';
  for (const auto& r : metrics.rows) {
    out << r.step << ',' << r.episodes << ',' << format_field(r.train_return) << ',' << format_field(r.eval_winrate)
        << ',' << format_field(r.loss) << '\n';
  }
}

std::vector<MetricsRow> read_metrics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw std::runtime_error("metrics: missing header");
  auto number = [](const std::string& s) { return s.empty() ? kAbsent : std::stod(s); };
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    f.resize(5);
    rows.push_back({std::stoll(f[0]), std::stoll(f[1]), number(f[2]), number(f[3]), number(f[4])});
  }
  return rows;
}

TrainOutput train(const RunConfig& config, const ProgressFn& progress) { return Trainer(config, progress).run(); }

EvalResult evaluate_policy(Env& env, Policy& policy, int episodes, std::uint64_t seed, bool record_replays) {
  if (episodes <= 0) throw std::invalid_argument("evaluation needs at least one episode");
  EvalResult result;
  result.episodes = episodes;
  RolloutOptions opts;
  opts.record_replay = record_replays;
  for (int i = 0; i < episodes; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    auto ep = run_episode(env, policy, derive_seed(seed, SeedStream::EvalWorld, idx),
                          derive_seed(seed, SeedStream::EvalActions, idx), opts);
    if (ep.outcome == combat::Outcome::Win) ++result.wins;
    if (record_replays) result.replays.push_back(std::move(ep.replay_lines));
  }
  result.win_rate = static_cast<double>(result.wins) / static_cast<double>(episodes);
  return result;
}

std::unique_ptr<learners::Learner> load_learner(const std::filesystem::path& checkpoint, const Env& env,
                                                RunConfig* config_out) {
  const std::filesystem::path sidecar = checkpoint.string() + ".cfg";
  if (!std::filesystem::exists(sidecar)) throw ad::CheckpointError("missing checkpoint config " + sidecar.string());
  const RunConfig config = load_config(sidecar);
  auto learner = learners::make_learner(config.algorithm, env.info(), config.learner, 0);
  learner->import_parameters(ad::load_checkpoint(checkpoint));
  if (config_out) *config_out = config;
  return learner;
}

EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::string& scenario_name, int episodes,
                               std::uint64_t seed, bool record_replays) {
  if (episodes <= 0) throw std::invalid_argument("evaluation needs at least one episode");
  const std::filesystem::path sidecar = checkpoint.string() + ".cfg";
  if (!std::filesystem::exists(sidecar)) throw ad::CheckpointError("missing checkpoint config " + sidecar.string());
  const RunConfig config = load_config(sidecar);
  Env env(scenario::load_scenario(scenario_name), config.perception, config.reward);
  auto learner = load_learner(checkpoint, env);
  ControllerPolicy policy(learner->make_controller());
  return evaluate_policy(env, policy, episodes, seed, record_replays);
}

void write_replays(const std::filesystem::path& dir, const std::vector<std::vector<std::string>>& replays) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < replays.size(); ++i) {
    std::ofstream out(dir / ("episode_" + std::to_string(i) + ".jsonl"));
    for (const auto& line : replays[i]) out << line << '\n';
  }
}

std::vector<TrainOutput> sweep(const RunConfig& base, const std::string& key, const std::vector<std::string>& values,
                               const ProgressFn& progress) {
  std::vector<RunConfig> configs;
  for (const auto& v : values) {
    RunConfig c = base;
    set_key(c, key, v);
    c.output_dir = (std::filesystem::path(base.output_dir) / (key + "=" + v)).string();
    configs.push_back(std::move(c));
  }
  std::vector<TrainOutput> outputs;
  for (const auto& c : configs) outputs.push_back(train(c, progress));
  return outputs;
}

}  // namespace hf::harness
