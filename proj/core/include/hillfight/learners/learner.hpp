#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hillfight/autodiff/checkpoint.hpp"
#include "hillfight/autodiff/nn.hpp"
#include "hillfight/learners/agent_net.hpp"
#include "hillfight/learners/risk.hpp"
#include "hillfight/replay/episode.hpp"

namespace hf::learners {

enum class Algorithm : std::uint8_t { Iql, Vdn, Qmix, Qtran, Diql, Ddn, Dmix, Drima, Coma, Masac, Maddpg };

std::optional<Algorithm> parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algorithm);
const std::vector<Algorithm>& all_algorithms();

/// Quantile-valued utilities (DIQL, DDN, DMIX, DRIMA).
bool is_distributional(Algorithm algorithm);
/// Explicit policy networks (COMA, MASAC, MADDPG).
bool is_policy_based(Algorithm algorithm);
/// Trains on the most recent episodes rather than a replay sample (COMA).
bool is_on_policy(Algorithm algorithm);

struct EnvInfo {
  std::size_t n_agents = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::size_t n_actions = 0;
  friend bool operator==(const EnvInfo&, const EnvInfo&) = default;
};

struct LearnerConfig {
  double gamma = 0.99;
  ad::RMSProp::Options optimizer{};
  std::size_t hidden = 64;
  std::size_t mixer_embed = 32;
  std::size_t critic_hidden = 64;
  std::size_t n_quantiles = 32;  // fractions per forward sample
  std::size_t quantile_embed = 64;
  /// Fraction portion for DIQL / DDN / DMIX.
  RiskInterval sampling = kRiskNeutral;
  /// DRIMA: agent portion conditions utilities and mixer, env portion sets the fractions.
  RiskLevel risk{};
  double qtran_opt_weight = 1.0;
  double qtran_nopt_weight = 1.0;
  double entropy_alpha = 0.01;
  double gumbel_temperature = 1.0;
};

/// Decentralized executor: a private copy of the agent parameters plus the
/// recurrent state of every agent. Uses local observations only.
class Controller {
 public:
  Controller(Algorithm algorithm, EnvInfo env, LearnerConfig config, UtilityNetwork net, ad::ParameterSet params);

  void reset();
  /// Copies refreshed parameter values (same names and shapes).
  void set_params(const ad::ParameterSet& params);

  /// One action per agent. With `explore` off the choice is greedy: argmax
  /// of values, quantile means or policy probabilities. With `explore` on,
  /// value methods are epsilon-greedy, COMA samples its epsilon-smoothed
  /// policy, MASAC samples its policy and MADDPG takes a Gumbel-max sample.
  std::vector<int> act(const std::vector<std::vector<double>>& observations,
                       const std::vector<std::vector<std::uint8_t>>& available, double epsilon, bool explore,
                       std::mt19937_64& rng);

  /// Per-agent scores of the last call (values, quantile means or probabilities).
  const std::vector<std::vector<double>>& last_scores() const noexcept { return scores_; }

 private:
  Algorithm algorithm_;
  EnvInfo env_;
  LearnerConfig config_;
  UtilityNetwork net_;
  ad::ParameterSet params_;
  ad::Tensor hidden_;
  std::vector<int> last_actions_;
  std::vector<std::vector<double>> scores_;
};

struct TrainStats {
  double loss = 0.0;
  double grad_norm = 0.0;
};

/// Owns trainable parameters, their target copies and optimizers. A learner
/// is a list of phases; each phase builds one loss on a fresh tape and steps
/// the optimizer of one parameter group.
class Learner {
 public:
  using LossBuilder = std::function<ad::Var(ad::Tape&, const replay::EpisodeBatch&, std::uint64_t seed)>;
  struct Phase {
    std::string name;
    ad::ParameterSet* params = nullptr;
    ad::RMSProp* optimizer = nullptr;
    LossBuilder build;
  };

  Learner(Algorithm algorithm, EnvInfo env, LearnerConfig config);
  virtual ~Learner() = default;
  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;

  Algorithm algorithm() const noexcept { return algorithm_; }
  const EnvInfo& env() const noexcept { return env_; }
  const LearnerConfig& config() const noexcept { return config_; }

  /// One pass over all phases. Throws ad::NumericError on a non-finite loss or gradient.
  TrainStats train(const replay::EpisodeBatch& batch, std::mt19937_64& rng);
  /// Hard copy of every trainable group into its target.
  void update_targets();

  Controller make_controller() const;
  const ad::ParameterSet& agent_params() const noexcept { return params_; }
  const UtilityNetwork& agent_net() const noexcept { return net_; }

  const std::vector<Phase>& phases() const noexcept { return phases_; }
  /// Every trainable group (the agent group first).
  std::vector<ad::ParameterSet*> parameter_groups();

  /// Stop-gradient quantities (QTRAN's fixed joint value, COMA's policy
  /// baseline) are normally the live values with gradients cut. Pinning a
  /// snapshot evaluates them at the snapshot instead, which lets a
  /// finite-difference check perturb the live parameters in isolation.
  void pin_stop_gradients(ad::ParameterSet* snapshot) noexcept { pinned_ = snapshot; }

  std::vector<ad::NamedTensor> export_parameters() const;
  /// Loads every group by name and resets the targets. Throws on any mismatch.
  void import_parameters(const std::vector<ad::NamedTensor>& tensors);

 protected:
  ad::ParameterSet& target_params() noexcept { return target_params_; }
  ad::ParameterSet& critic_params() noexcept { return critic_params_; }
  ad::ParameterSet& target_critic_params() noexcept { return target_critic_params_; }
  void finish_setup();

  Algorithm algorithm_;
  EnvInfo env_;
  LearnerConfig config_;
  UtilityNetwork net_;
  ad::ParameterSet params_;         // agent network (+ mixer for value methods)
  ad::ParameterSet critic_params_;  // critics and their mixers (policy methods)
  ad::ParameterSet target_params_;
  ad::ParameterSet target_critic_params_;
  ad::RMSProp optimizer_;
  ad::RMSProp critic_optimizer_;
  std::vector<Phase> phases_;
  ad::ParameterSet* pinned_ = nullptr;
};

std::unique_ptr<Learner> make_learner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config,
                                      std::uint64_t seed);

/// Utility-network input width for an algorithm.
std::size_t utility_input_size(Algorithm algorithm, const EnvInfo& env);

}  // namespace hf::learners
