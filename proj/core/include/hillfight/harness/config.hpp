#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hillfight/learners/learner.hpp"
#include "hillfight/perception/perception.hpp"
#include "hillfight/replay/schedule.hpp"
#include "hillfight/reward/reward.hpp"

namespace hf::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EpsilonIndex : std::uint8_t { EnvSteps, Updates };

/// Everything a training run needs. Defaults follow the paper's training
/// table; mode-dependent values left at 0 resolve through the accessors.
struct RunConfig {
  std::string scenario = "smoke_3v2";
  learners::Algorithm algorithm = learners::Algorithm::Qmix;
  std::uint64_t seed = 1;

  std::int64_t total_steps = 10050000;
  replay::BufferMode mode = replay::BufferMode::Episodic;
  int runners = 0;          // 0: 1 episodic, 20 parallel
  int update_interval = 0;  // episodes per learner update; 0: mode cadence
  int target_update = 200;  // episodes per hard target copy
  std::size_t buffer_size = 5000;
  std::size_t batch_size = 32;

  replay::EpsilonSchedule epsilon{};
  EpsilonIndex epsilon_index = EpsilonIndex::EnvSteps;

  learners::LearnerConfig learner{};
  perception::PerceptionConfig perception{};
  reward::RewardConfig reward{};

  std::int64_t eval_interval = 10000;
  int eval_episodes = 0;  // 0: 32 episodic, 20 parallel

  std::string output_dir = "runs/default";
  bool save_replays = false;

  int resolved_runners() const;
  int resolved_update_interval() const;
  int resolved_eval_episodes() const;
};

/// Sets one dotted key from its text value. Throws ConfigError for unknown
/// keys or malformed values.
void set_key(RunConfig& config, std::string_view key, std::string_view value);
std::string get_key(const RunConfig& config, std::string_view key);
const std::vector<std::string>& config_keys();

/// `key = value` lines; `#` starts a comment. Unknown or repeated keys are errors.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);
/// Every key in canonical order; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

/// Semantic problems (empty when the config is usable).
std::vector<std::string> check(const RunConfig& config);

}  // namespace hf::harness
