#include <stdexcept>

#include "detail.hpp"
#include "hillfight/learners/losses.hpp"
#include "hillfight/learners/mixers.hpp"

namespace hf::learners::detail {
namespace {

/// Three-layer feed-forward critic.
struct Mlp {
  ad::Dense l1, l2, l3;

  static Mlp create(ad::ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t hidden,
                    std::size_t out, std::mt19937_64& rng) {
    return {ad::Dense::create(params, prefix + ".fc1", in, hidden, rng),
            ad::Dense::create(params, prefix + ".fc2", hidden, hidden, rng),
            ad::Dense::create(params, prefix + ".fc3", hidden, out, rng)};
  }
  ad::Var forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var x) const {
    return l3.forward(tape, params, ad::relu(l2.forward(tape, params, ad::relu(l1.forward(tape, params, x)))));
  }
};

/// Actor unrolled over ticks 0..steps-1; returns per-tick logits [B*N, U].
std::vector<ad::Var> unroll_actor(ad::Tape& tape, const UtilityNetwork& net, ad::ParameterSet& params,
                                  const EpisodeBatch& batch, std::size_t steps) {
  std::vector<ad::Var> out;
  ad::Var h = net.initial_hidden(tape, batch.batch * batch.n_agents);
  for (std::size_t t = 0; t < steps; ++t) {
    auto step = net.forward(tape, params, tape.constant(inputs_at(batch, t)), h);
    h = step.hidden;
    out.push_back(step.values);
  }
  return out;
}

/// Policy masks of ticks 0..L-1 stacked in agent-row order.
std::vector<double> stacked_policy_mask(const EpisodeBatch& batch) {
  std::vector<double> mask;
  for (std::size_t t = 0; t < batch.max_length; ++t) {
    const auto m = policy_mask_at(batch, t);
    mask.insert(mask.end(), m.begin(), m.end());
  }
  return mask;
}

/// Row mask over stacked agent rows: episode row mask repeated per agent.
std::vector<double> agent_row_mask(const Transitions& tr, std::size_t n_agents) {
  return repeat_each(tr.filled, n_agents);
}

std::vector<std::size_t> stacked_actions(const EpisodeBatch& batch) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < batch.max_length; ++t) {
    const auto a = actions_at(batch, t);
    out.insert(out.end(), a.begin(), a.end());
  }
  return out;
}

class PolicyLearner : public Learner {
 public:
  PolicyLearner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config, std::mt19937_64& rng)
      : Learner(algorithm, env, config) {
    net_ = UtilityNetwork::create(params_, "agent",
                                  {utility_input_size(algorithm, env), env.n_actions, config.hidden, 0}, rng);
  }

 protected:
  void add_phases() {
    phases_.push_back({"critic", &critic_params_, &critic_optimizer_,
                       [this](ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t seed) {
                         return critic_loss(tape, batch, seed);
                       }});
    phases_.push_back({"actor", &params_, &optimizer_,
                       [this](ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t seed) {
                         return actor_loss(tape, batch, seed);
                       }});
    finish_setup();
  }
  virtual ad::Var critic_loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t seed) = 0;
  virtual ad::Var actor_loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t seed) = 0;
};

// --------------------------------------------------------------------- COMA

/// Centralized critic Q(s, o_a, a, u^{-a}, .) over agent a's actions; the
/// actor follows the counterfactual advantage.
class ComaLearner final : public PolicyLearner {
 public:
  ComaLearner(const EnvInfo& env, const LearnerConfig& config, std::mt19937_64& rng)
      : PolicyLearner(Algorithm::Coma, env, config, rng) {
    critic_ = Mlp::create(critic_params_, "critic", critic_input(), config.critic_hidden, env.n_actions, rng);
    add_phases();
  }

 private:
  std::size_t critic_input() const {
    return env_.state_dim + env_.obs_dim + env_.n_agents + env_.n_agents * env_.n_actions;
  }

  /// Critic rows (t * B + b) * N + i for ticks [t0, t1).
  ad::Tensor critic_inputs(const EpisodeBatch& batch, std::size_t t0, std::size_t t1) const {
    const std::size_t n = env_.n_agents, u = env_.n_actions, s = env_.state_dim, o = env_.obs_dim;
    const std::size_t width = critic_input();
    ad::Tensor x = ad::Tensor::matrix((t1 - t0) * batch.batch * n, width);
    for (std::size_t t = t0; t < t1; ++t) {
      for (std::size_t b = 0; b < batch.batch; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
          double* row = x.data() + (((t - t0) * batch.batch + b) * n + i) * width;
          std::copy_n(batch.state_at(b, t), s, row);
          std::copy_n(batch.obs_at(b, t, i), o, row + s);
          row[s + o + i] = 1.0;
          if (t >= batch.max_length) continue;
          for (std::size_t j = 0; j < n; ++j) {
            if (j != i) row[s + o + n + j * u + static_cast<std::size_t>(batch.action_at(b, t, j))] = 1.0;
          }
        }
      }
    }
    return x;
  }

  ad::Var critic_loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t) override {
    const std::size_t bsz = batch.batch, n = env_.n_agents, len = batch.max_length;
    const Transitions tr = transitions(batch);
    const auto taken = stacked_actions(batch);
    ad::Var q = critic_.forward(tape, critic_params_, tape.constant(critic_inputs(batch, 0, len)));
    ad::Var q_taken = ad::gather_cols(q, taken);

    // One-step SARSA target with the next joint action from the batch. The
    // last transition of an episode has no next action and does not bootstrap.
    ad::Tape tt;
    ad::Var q_next = critic_.forward(tt, target_critic_params_, tt.constant(critic_inputs(batch, 1, len + 1)));
    std::vector<double> y(len * bsz * n);
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t m = t * bsz + b;
        const bool last = t + 1 >= batch.lengths[b];
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t r = m * n + i;
          double next = 0.0;
          if (!last) next = q_next.value().at(r, static_cast<std::size_t>(batch.action_at(b, t + 1, i)));
          y[r] = td_target(tr.reward[m], config_.gamma, next, last || tr.terminal[m] != 0.0);
        }
      }
    }
    return masked_mse(q_taken, y, agent_row_mask(tr, n));
  }

  ad::Var actor_loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t) override {
    const std::size_t n = env_.n_agents, u = env_.n_actions, len = batch.max_length;
    const Transitions tr = transitions(batch);
    const auto taken = stacked_actions(batch);
    const auto mask = stacked_policy_mask(batch);
    ad::Var logits = ad::concat_rows(unroll_actor(tape, net_, params_, batch, len));
    ad::Var log_pi = ad::masked_log_softmax(logits, mask);
    ad::Tape pt;
    const ad::Tensor pi =
        ad::masked_softmax(pinned_ ? ad::concat_rows(unroll_actor(pt, net_, *pinned_, batch, len)) : ad::detach(logits),
                           mask)
            .value();

    ad::Tape ct;
    const ad::Tensor q = critic_.forward(ct, critic_params_, ct.constant(critic_inputs(batch, 0, len))).value();
    const std::size_t rows = q.rows();
    ad::Tensor advantage = ad::Tensor::matrix(rows, 1);
    for (std::size_t r = 0; r < rows; ++r) {
      advantage[r] = coma_advantage({q.data() + r * u, u}, {pi.data() + r * u, u}, taken[r]);
    }
    const auto row_mask = agent_row_mask(tr, n);
    ad::Var weighted = ad::mul(ad::gather_cols(log_pi, taken), tape.constant(std::move(advantage)));
    ad::Var w = tape.constant(ad::Tensor(ad::Shape{rows, 1}, row_mask));
    double total = 0.0;
    for (double v : row_mask) total += v;
    return ad::scale(ad::sum(ad::mul(weighted, w)), total > 0.0 ? -1.0 / total : 0.0);
  }

  Mlp critic_;
};

// -------------------------------------------------------------------- MASAC

/// Per-agent recurrent critics mixed by a monotone value network; the
/// policy maximises the mixed expected value plus entropy.
class MasacLearner final : public PolicyLearner {
 public:
  MasacLearner(const EnvInfo& env, const LearnerConfig& config, std::mt19937_64& rng)
      : PolicyLearner(Algorithm::Masac, env, config, rng) {
    critic_ = UtilityNetwork::create(critic_params_, "critic",
                                     {utility_input_size(Algorithm::Masac, env), env.n_actions, config.critic_hidden, 0},
                                     rng);
    mixer_ = QmixMixer::create(critic_params_, "mixer", env.state_dim, env.n_agents, config.mixer_embed, rng);
    add_phases();
  }

 private:
  ad::Var critic_loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t) override {
    const std::size_t bsz = batch.batch, n = env_.n_agents, len = batch.max_length;
    const std::size_t rows = len * bsz;
    const Transitions tr = transitions(batch);
    const auto qs = unroll_actor(tape, critic_, critic_params_, batch, len);
    std::vector<ad::Var> chosen;
    for (std::size_t t = 0; t < len; ++t) {
      chosen.push_back(ad::reshape(ad::gather_cols(qs[t], actions_at(batch, t)), ad::Shape{bsz, n}));
    }
    ad::Var q_tot = mixer_.forward(tape, critic_params_, ad::concat_rows(chosen),
                                   tape.constant(states_range(batch, 0, len)));

    // Target as printed: mix of each agent's minimum next-action value.
    ad::Tape tt;
    const auto next_q = unroll_actor(tt, critic_, target_critic_params_, batch, len + 1);
    ad::Tensor next_min = ad::Tensor::matrix(rows, n);
    for (std::size_t t = 0; t < len; ++t) {
      const auto m = masked_min_rows(next_q[t + 1].value(), batch, t + 1);
      std::copy(m.begin(), m.end(), next_min.data() + t * bsz * n);
    }
    ad::Var next_tot = mixer_.forward(tt, target_critic_params_, tt.constant(std::move(next_min)),
                                      tt.constant(states_range(batch, 1, len + 1)));
    std::vector<double> y(rows);
    for (std::size_t m = 0; m < rows; ++m) {
      y[m] = td_target(tr.reward[m], config_.gamma, next_tot.value()[m], tr.terminal[m] != 0.0);
    }
    return masked_mse(q_tot, y, tr.filled);
  }

  ad::Var actor_loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t) override {
    const std::size_t bsz = batch.batch, n = env_.n_agents, len = batch.max_length;
    const Transitions tr = transitions(batch);
    const auto mask = stacked_policy_mask(batch);
    ad::Var logits = ad::concat_rows(unroll_actor(tape, net_, params_, batch, len));
    ad::Var pi = ad::masked_softmax(logits, mask);
    ad::Var log_pi = ad::masked_log_softmax(logits, mask);

    ad::Tape ct;
    ad::Tensor q = ad::concat_rows(unroll_actor(ct, critic_, critic_params_, batch, len)).value();
    ad::Var expected = ad::reshape(ad::sum_cols(ad::mul(pi, tape.constant(std::move(q)))), ad::Shape{len * bsz, n});
    ad::Var q_tot = mixer_.forward(tape, critic_params_, expected, tape.constant(states_range(batch, 0, len)));
    return masac_policy_loss(policy_neg_entropy(pi, log_pi, n), q_tot, config_.entropy_alpha, tr.filled);
  }

  UtilityNetwork critic_;
  QmixMixer mixer_;
};

// ------------------------------------------------------------------- MADDPG

/// Centralized critic Q_i(s, u_1..u_N) per agent (shared weights plus agent
/// id) and deterministic actors relaxed through Gumbel-softmax.
class MaddpgLearner final : public PolicyLearner {
 public:
  MaddpgLearner(const EnvInfo& env, const LearnerConfig& config, std::mt19937_64& rng)
      : PolicyLearner(Algorithm::Maddpg, env, config, rng) {
    critic_ = Mlp::create(critic_params_, "critic", critic_input(), config.critic_hidden, 1, rng);
    add_phases();
  }

 private:
  std::size_t critic_input() const { return env_.state_dim + env_.n_agents * env_.n_actions + env_.n_agents; }

  /// Constant state and agent-id columns for stacked agent rows of ticks [t0, t1).
  std::pair<ad::Tensor, ad::Tensor> state_and_id(const EpisodeBatch& batch, std::size_t t0, std::size_t t1) const {
    const std::size_t n = env_.n_agents, s = env_.state_dim;
    const std::size_t rows = (t1 - t0) * batch.batch * n;
    ad::Tensor states = ad::Tensor::matrix(rows, s);
    ad::Tensor ids = ad::Tensor::matrix(rows, n);
    for (std::size_t t = t0; t < t1; ++t) {
      for (std::size_t b = 0; b < batch.batch; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t r = ((t - t0) * batch.batch + b) * n + i;
          std::copy_n(batch.state_at(b, t), s, states.data() + r * s);
          ids.at(r, i) = 1.0;
        }
      }
    }
    return {std::move(states), std::move(ids)};
  }

  ad::Var critic_value(ad::Tape& tape, ad::ParameterSet& params, const ad::Tensor& states, ad::Var joint,
                       const ad::Tensor& ids) const {
    const ad::Var parts[] = {tape.constant(states), joint, tape.constant(ids)};
    return critic_.forward(tape, params, ad::concat_cols(parts));
  }

  /// Joint one-hot per agent row (each agent row carries the full joint action).
  ad::Tensor joint_rows(std::span<const std::size_t> actions, bool zero_own) const {
    const std::size_t n = env_.n_agents, u = env_.n_actions;
    const ad::Tensor joint = joint_onehot(actions, n, u);
    ad::Tensor out = ad::Tensor::matrix(joint.rows() * n, n * u);
    for (std::size_t m = 0; m < joint.rows(); ++m) {
      for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(joint.data() + m * n * u, n * u, out.data() + (m * n + i) * n * u);
        if (zero_own) std::fill_n(out.data() + (m * n + i) * n * u + i * u, u, 0.0);
      }
    }
    return out;
  }

  ad::Var critic_loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t) override {
    const std::size_t n = env_.n_agents, len = batch.max_length;
    const Transitions tr = transitions(batch);
    const auto [states, ids] = state_and_id(batch, 0, len);
    ad::Var q = critic_value(tape, critic_params_, states, tape.constant(joint_rows(stacked_actions(batch), false)), ids);

    // Target actions: argmax of the target actors at the next tick.
    ad::Tape tt;
    const auto next_logits = unroll_actor(tt, net_, target_params_, batch, len + 1);
    std::vector<std::size_t> next_actions;
    for (std::size_t t = 0; t < len; ++t) {
      const auto g = masked_argmax_rows(next_logits[t + 1].value(), batch, t + 1);
      next_actions.insert(next_actions.end(), g.begin(), g.end());
    }
    const auto [next_states, next_ids] = state_and_id(batch, 1, len + 1);
    ad::Var q_next = critic_value(tt, target_critic_params_, next_states, tt.constant(joint_rows(next_actions, false)),
                                  next_ids);
    std::vector<double> y(q.rows());
    for (std::size_t r = 0; r < y.size(); ++r) {
      const std::size_t m = r / n;
      y[r] = td_target(tr.reward[m], config_.gamma, q_next.value()[r], tr.terminal[m] != 0.0);
    }
    return masked_mse(q, y, agent_row_mask(tr, n));
  }

  ad::Var actor_loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t seed) override {
    const std::size_t n = env_.n_agents, u = env_.n_actions, len = batch.max_length;
    const Transitions tr = transitions(batch);
    const auto mask = stacked_policy_mask(batch);
    ad::Var logits = ad::concat_rows(unroll_actor(tape, net_, params_, batch, len));
    std::mt19937_64 rng(seed);
    const ad::Tensor noise = sample_gumbel(logits.rows(), u, rng);
    ad::Var relaxed = gumbel_softmax(logits, noise, mask, config_.gumbel_temperature);

    // Own block replaced by the relaxed action, the others from the batch.
    const std::size_t rows = logits.rows();
    std::vector<ad::Var> blocks;
    for (std::size_t j = 0; j < n; ++j) {
      ad::Tensor own = ad::Tensor::matrix(rows, 1);
      for (std::size_t r = 0; r < rows; ++r) own[r] = r % n == j ? 1.0 : 0.0;
      blocks.push_back(ad::mul_col(relaxed, tape.constant(std::move(own))));
    }
    ad::Var joint = ad::add(tape.constant(joint_rows(stacked_actions(batch), true)), ad::concat_cols(blocks));
    const auto [states, ids] = state_and_id(batch, 0, len);
    ad::Var q = critic_value(tape, critic_params_, states, joint, ids);
    const auto row_mask = agent_row_mask(tr, n);
    double total = 0.0;
    for (double v : row_mask) total += v;
    ad::Var w = tape.constant(ad::Tensor(ad::Shape{rows, 1}, row_mask));
    return ad::scale(ad::sum(ad::mul(q, w)), total > 0.0 ? -1.0 / total : 0.0);
  }

  Mlp critic_;
};

}  // namespace

std::unique_ptr<Learner> make_policy_learner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config,
                                             std::mt19937_64& rng) {
  switch (algorithm) {
    case Algorithm::Coma: return std::make_unique<ComaLearner>(env, config, rng);
    case Algorithm::Masac: return std::make_unique<MasacLearner>(env, config, rng);
    case Algorithm::Maddpg: return std::make_unique<MaddpgLearner>(env, config, rng);
    default: throw std::invalid_argument("not a policy-gradient algorithm: " + std::string(to_string(algorithm)));
  }
}

}  // namespace hf::learners::detail
