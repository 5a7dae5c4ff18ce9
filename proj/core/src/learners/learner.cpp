#include "hillfight/learners/learner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "detail.hpp"
#include "hillfight/learners/losses.hpp"

namespace hf::learners {
namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 11> kNames{{
    {Algorithm::Iql, "iql"},
    {Algorithm::Vdn, "vdn"},
    {Algorithm::Qmix, "qmix"},
    {Algorithm::Qtran, "qtran"},
    {Algorithm::Diql, "diql"},
    {Algorithm::Ddn, "ddn"},
    {Algorithm::Dmix, "dmix"},
    {Algorithm::Drima, "drima"},
    {Algorithm::Coma, "coma"},
    {Algorithm::Masac, "masac"},
    {Algorithm::Maddpg, "maddpg"},
}};

std::size_t sample_index(std::span<const double> weights, std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> d(weights.begin(), weights.end());
  return d(rng);
}

std::size_t uniform_legal(std::span<const std::uint8_t> avail, std::mt19937_64& rng) {
  std::vector<double> w(avail.begin(), avail.end());
  return sample_index(w, rng);
}

}  // namespace

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (const auto& [algo, text] : kNames) {
    if (text == name) return algo;
  }
  return std::nullopt;
}

std::string_view to_string(Algorithm algorithm) {
  for (const auto& [algo, text] : kNames) {
    if (algo == algorithm) return text;
  }
  return "?";
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = [] {
    std::vector<Algorithm> v;
    for (const auto& entry : kNames) v.push_back(entry.first);
    return v;
  }();
  return all;
}

bool is_distributional(Algorithm a) {
  return a == Algorithm::Diql || a == Algorithm::Ddn || a == Algorithm::Dmix || a == Algorithm::Drima;
}

bool is_policy_based(Algorithm a) { return a == Algorithm::Coma || a == Algorithm::Masac || a == Algorithm::Maddpg; }

bool is_on_policy(Algorithm a) { return a == Algorithm::Coma; }

std::size_t utility_input_size(Algorithm algorithm, const EnvInfo& env) {
  return agent_input_size(env.obs_dim, env.n_actions, env.n_agents, algorithm == Algorithm::Drima ? 1 : 0);
}

RiskInterval detail::fraction_portion(Algorithm algorithm, const LearnerConfig& config) {
  return algorithm == Algorithm::Drima ? config.risk.env : config.sampling;
}

// ---------------------------------------------------------------- Controller

Controller::Controller(Algorithm algorithm, EnvInfo env, LearnerConfig config, UtilityNetwork net,
                       ad::ParameterSet params)
    : algorithm_(algorithm),
      env_(env),
      config_(config),
      net_(std::move(net)),
      params_(std::move(params)) {
  reset();
}

void Controller::reset() {
  hidden_ = ad::Tensor::matrix(env_.n_agents, net_.config().hidden);
  last_actions_.assign(env_.n_agents, -1);
  scores_.assign(env_.n_agents, std::vector<double>(env_.n_actions, 0.0));
}

void Controller::set_params(const ad::ParameterSet& params) { params_.copy_values_from(params); }

std::vector<int> Controller::act(const std::vector<std::vector<double>>& observations,
                                 const std::vector<std::vector<std::uint8_t>>& available, double epsilon, bool explore,
                                 std::mt19937_64& rng) {
  const std::size_t n = env_.n_agents, u = env_.n_actions;
  if (observations.size() != n || available.size() != n) {
    throw ad::DimensionError("controller expects one observation and mask per agent");
  }
  std::vector<double> extra;
  if (algorithm_ == Algorithm::Drima) {
    std::uniform_real_distribution<double> w(config_.risk.agent.lower, config_.risk.agent.upper);
    extra.push_back(w(rng));
  }
  const std::size_t width = net_.config().input_dim;
  ad::Tensor x = ad::Tensor::matrix(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    if (observations[i].size() != env_.obs_dim || available[i].size() != u) {
      throw ad::DimensionError("controller: observation or mask width mismatch for agent " + std::to_string(i));
    }
    const auto row = agent_input(observations[i], last_actions_[i], u, i, n, extra);
    std::copy(row.begin(), row.end(), x.data() + i * width);
  }

  ad::Tape tape;
  ad::Var h = tape.constant(hidden_);
  ad::Tensor scores;
  ad::Tensor next_hidden;
  if (net_.distributional()) {
    const std::size_t k = config_.n_quantiles;
    const auto taus = sample_fractions(detail::fraction_portion(algorithm_, config_), k, rng);
    std::vector<double> all_taus;
    for (std::size_t i = 0; i < n; ++i) all_taus.insert(all_taus.end(), taus.begin(), taus.end());
    auto out = net_.forward_quantiles(tape, params_, tape.constant(std::move(x)), h, all_taus, k);
    scores = detail::quantile_means(out.values.value(), k);
    next_hidden = out.hidden.value();
  } else {
    auto out = net_.forward(tape, params_, tape.constant(std::move(x)), h);
    scores = out.values.value();
    next_hidden = out.hidden.value();
  }

  const bool policy = algorithm_ == Algorithm::Coma || algorithm_ == Algorithm::Masac;
  std::vector<int> actions(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(scores.data() + i * u, scores.data() + (i + 1) * u);
    const std::span<const std::uint8_t> avail = available[i];
    if (policy) {
      // Softmax over legal logits.
      double mx = -1e300;
      for (std::size_t a = 0; a < u; ++a) {
        if (avail[a]) mx = std::max(mx, row[a]);
      }
      double z = 0.0;
      std::size_t legal = 0;
      for (std::size_t a = 0; a < u; ++a) {
        row[a] = avail[a] ? std::exp(row[a] - mx) : 0.0;
        z += row[a];
        legal += avail[a] ? 1 : 0;
      }
      for (auto& p : row) p /= z;
      if (explore && algorithm_ == Algorithm::Coma) {
        for (std::size_t a = 0; a < u; ++a) {
          if (avail[a]) row[a] = (1.0 - epsilon) * row[a] + epsilon / static_cast<double>(legal);
        }
      }
    }
    std::size_t choice = 0;
    if (!explore) {
      choice = masked_argmax(row, avail);
    } else if (policy) {
      choice = sample_index(row, rng);
    } else if (algorithm_ == Algorithm::Maddpg) {
      const ad::Tensor g = sample_gumbel(1, u, rng);
      std::vector<double> perturbed(u);
      for (std::size_t a = 0; a < u; ++a) perturbed[a] = row[a] + g[a];
      choice = masked_argmax(perturbed, avail);
    } else {
      std::bernoulli_distribution coin(std::clamp(epsilon, 0.0, 1.0));
      choice = coin(rng) ? uniform_legal(avail, rng) : masked_argmax(row, avail);
    }
    if (choice >= u) throw std::logic_error("agent " + std::to_string(i) + " has no available action");
    actions[i] = static_cast<int>(choice);
    scores_[i] = std::move(row);
  }
  hidden_ = std::move(next_hidden);
  last_actions_ = actions;
  return actions;
}

// ------------------------------------------------------------------- Learner

Learner::Learner(Algorithm algorithm, EnvInfo env, LearnerConfig config)
    : algorithm_(algorithm), env_(env), config_(config) {
  if (env.n_agents == 0 || env.obs_dim == 0 || env.state_dim == 0 || env.n_actions == 0) {
    throw ad::DimensionError("learner needs positive agent, observation, state and action sizes");
  }
  if (!(config.gamma >= 0.0 && config.gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (config.n_quantiles == 0) throw std::invalid_argument("n_quantiles must be positive");
  if (!config.risk.valid()) throw std::invalid_argument("risk intervals must satisfy 0 <= lower < upper <= 1");
  if (config.entropy_alpha < 0.0) throw std::invalid_argument("entropy alpha must be non-negative");
}

void Learner::finish_setup() {
  target_params_ = params_;
  target_critic_params_ = critic_params_;
  optimizer_ = ad::RMSProp(config_.optimizer);
  critic_optimizer_ = ad::RMSProp(config_.optimizer);
}

TrainStats Learner::train(const replay::EpisodeBatch& batch, std::mt19937_64& rng) {
  if (batch.n_agents != env_.n_agents || batch.obs_dim != env_.obs_dim || batch.state_dim != env_.state_dim ||
      batch.n_actions != env_.n_actions) {
    throw ad::DimensionError("episode batch does not match the learner's environment");
  }
  TrainStats stats;
  const std::uint64_t seed = rng();
  for (const auto& phase : phases_) {
    ad::Tape tape;
    ad::Var loss = phase.build(tape, batch, seed);
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw ad::NumericError("non-finite " + phase.name + " loss");
    params_.zero_grad();
    critic_params_.zero_grad();
    tape.backward(loss);
    stats.grad_norm = std::max(stats.grad_norm, phase.optimizer->step(*phase.params));
    stats.loss += value;
  }
  return stats;
}

void Learner::update_targets() {
  target_params_.copy_values_from(params_);
  target_critic_params_.copy_values_from(critic_params_);
}

Controller Learner::make_controller() const { return Controller(algorithm_, env_, config_, net_, params_); }

std::vector<ad::ParameterSet*> Learner::parameter_groups() {
  std::vector<ad::ParameterSet*> groups{&params_};
  if (critic_params_.size() > 0) groups.push_back(&critic_params_);
  return groups;
}

std::vector<ad::NamedTensor> Learner::export_parameters() const {
  auto out = params_.export_values();
  auto critic = critic_params_.export_values();
  out.insert(out.end(), std::make_move_iterator(critic.begin()), std::make_move_iterator(critic.end()));
  return out;
}

void Learner::import_parameters(const std::vector<ad::NamedTensor>& tensors) {
  std::vector<ad::NamedTensor> agent, critic;
  for (const auto& t : tensors) {
    if (params_.find(t.name) < params_.size()) {
      agent.push_back(t);
    } else if (critic_params_.find(t.name) < critic_params_.size()) {
      critic.push_back(t);
    } else {
      throw ad::CheckpointError("checkpoint tensor '" + t.name + "' does not belong to a " +
                                std::string(to_string(algorithm_)) + " learner");
    }
  }
  try {
    params_.load(agent);
    critic_params_.load(critic);
  } catch (const ad::DimensionError& e) {
    throw ad::CheckpointError(e.what());
  }
  update_targets();
}

std::unique_ptr<Learner> make_learner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (is_policy_based(algorithm)) return detail::make_policy_learner(algorithm, env, config, rng);
  if (is_distributional(algorithm)) return detail::make_quantile_learner(algorithm, env, config, rng);
  return detail::make_value_learner(algorithm, env, config, rng);
}

}  // namespace hf::learners
