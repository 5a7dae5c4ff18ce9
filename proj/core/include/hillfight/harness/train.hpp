#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hillfight/harness/config.hpp"
#include "hillfight/harness/rollout.hpp"

namespace hf::harness {

/// A run stopped on a non-finite loss; the diagnostic snapshot path is in what().
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One evaluation point. Training averages cover the episodes and updates
/// since the previous row and are absent (NaN) when there were none.
struct MetricsRow {
  std::int64_t step = 0;  // a multiple of eval_interval
  std::int64_t episodes = 0;
  double train_return = 0.0;
  double eval_winrate = 0.0;
  double loss = 0.0;
  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;
  std::int64_t env_steps = 0;
  std::int64_t episodes = 0;
  std::int64_t updates = 0;
  /// Win-rate of the last evaluation; nullopt when none ran.
  std::optional<double> final_winrate;
};

inline constexpr const char* kMetricsHeader = "step,episodes,train_return,eval_winrate,loss";

/// CSV with kMetricsHeader; absent values are empty fields; doubles in shortest round-trip form.
void write_metrics(std::ostream& out, const RunMetrics& metrics);
std::vector<MetricsRow> read_metrics(std::istream& in);

struct TrainOutput {
  RunMetrics metrics;
  std::filesystem::path checkpoint;
};

/// Called on the learner thread after each metrics row is written.
using ProgressFn = std::function<void(const MetricsRow&)>;

/// Rollout -> buffer -> update loop. Writes metrics.csv, checkpoint.bin and
/// its checkpoint.bin.cfg sidecar under config.output_dir; with
/// output.replays, evaluation replays go to replays/step_<N>/.
TrainOutput train(const RunConfig& config, const ProgressFn& progress = {});

struct EvalResult {
  int wins = 0;
  int episodes = 0;
  double win_rate = 0.0;
  /// Per-episode JSON-lines replay logs when requested.
  std::vector<std::vector<std::string>> replays;
};

/// Greedy episodes with fixed seeds derived from `seed`. Throws std::invalid_argument for episodes <= 0.
EvalResult evaluate_policy(Env& env, Policy& policy, int episodes, std::uint64_t seed, bool record_replays);

/// Rebuilds the learner described by the checkpoint's sidecar config for
/// `scenario` and evaluates it greedily. Dimension mismatches raise ad::CheckpointError.
EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::string& scenario, int episodes,
                               std::uint64_t seed, bool record_replays);

/// Writes replay logs as <dir>/episode_<i>.jsonl.
void write_replays(const std::filesystem::path& dir, const std::vector<std::vector<std::string>>& replays);

/// Loads checkpoint tensors into a learner built from the sidecar config.
std::unique_ptr<learners::Learner> load_learner(const std::filesystem::path& checkpoint, const Env& env,
                                                RunConfig* config_out = nullptr);

/// One training run per value of `key`, each under <output_dir>/<key>=<value>.
std::vector<TrainOutput> sweep(const RunConfig& base, const std::string& key, const std::vector<std::string>& values,
                               const ProgressFn& progress = {});

}  // namespace hf::harness
