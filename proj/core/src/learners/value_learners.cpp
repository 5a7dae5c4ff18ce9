#include <stdexcept>

#include "detail.hpp"
#include "hillfight/learners/losses.hpp"
#include "hillfight/learners/mixers.hpp"

namespace hf::learners::detail {
namespace {

/// IQL, VDN, QMIX and QTRAN: one recurrent utility shared by all agents plus
/// an optional mixer, trained together by one TD phase.
class ValueLearner final : public Learner {
 public:
  ValueLearner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config, std::mt19937_64& rng)
      : Learner(algorithm, env, config) {
    net_ = UtilityNetwork::create(params_, "agent",
                                  {utility_input_size(algorithm, env), env.n_actions, config.hidden, 0}, rng);
    if (algorithm == Algorithm::Qmix) {
      qmix_ = QmixMixer::create(params_, "mixer", env.state_dim, env.n_agents, config.mixer_embed, rng);
    } else if (algorithm == Algorithm::Qtran) {
      qtran_ = QtranMixer::create(params_, "mixer", env.state_dim, env.n_agents, env.n_actions, config.critic_hidden,
                                  rng);
    }
    phases_.push_back({"td", &params_, &optimizer_,
                       [this](ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t) { return loss(tape, batch); }});
    finish_setup();
  }

 private:
  struct TargetPass {
    std::vector<ad::Tensor> q;  // per tick 0..L, [B*N, U]
  };

  TargetPass target_pass(const EpisodeBatch& batch) {
    TargetPass out;
    ad::Tape tape;
    ad::Var h = net_.initial_hidden(tape, batch.batch * env_.n_agents);
    for (std::size_t t = 0; t <= batch.max_length; ++t) {
      auto step = net_.forward(tape, target_params_, tape.constant(inputs_at(batch, t)), h);
      h = ad::detach(step.hidden);
      out.q.push_back(step.values.value());
    }
    return out;
  }

  ad::Var loss(ad::Tape& tape, const EpisodeBatch& batch) {
    const std::size_t bsz = batch.batch, n = env_.n_agents, len = batch.max_length;
    const std::size_t rows = len * bsz;
    const Transitions tr = transitions(batch);
    const double gamma = config_.gamma;

    // Online utilities over ticks 0..L-1.
    std::vector<ad::Var> chosen, greedy_chosen;
    std::vector<std::size_t> taken_all, greedy_all;
    ad::Var h = net_.initial_hidden(tape, bsz * n);
    for (std::size_t t = 0; t < len; ++t) {
      auto step = net_.forward(tape, params_, tape.constant(inputs_at(batch, t)), h);
      h = step.hidden;
      const auto taken = actions_at(batch, t);
      chosen.push_back(ad::reshape(ad::gather_cols(step.values, taken), ad::Shape{bsz, n}));
      if (algorithm_ == Algorithm::Qtran) {
        const auto greedy = masked_argmax_rows(step.values.value(), batch, t);
        greedy_chosen.push_back(ad::reshape(ad::gather_cols(step.values, greedy), ad::Shape{bsz, n}));
        taken_all.insert(taken_all.end(), taken.begin(), taken.end());
        greedy_all.insert(greedy_all.end(), greedy.begin(), greedy.end());
      }
    }
    ad::Var q_taken = ad::concat_rows(chosen);  // [L*B, N]
    const TargetPass target = target_pass(batch);

    if (algorithm_ == Algorithm::Iql) {
      std::vector<double> y(rows * n), mask(rows * n);
      for (std::size_t t = 0; t < len; ++t) {
        const auto next = masked_max_rows(target.q[t + 1], batch, t + 1);
        for (std::size_t b = 0; b < bsz; ++b) {
          const std::size_t m = t * bsz + b;
          for (std::size_t i = 0; i < n; ++i) {
            y[m * n + i] = td_target(tr.reward[m], gamma, next[b * n + i], tr.terminal[m] != 0.0);
            mask[m * n + i] = tr.filled[m];
          }
        }
      }
      return masked_mse(ad::reshape(q_taken, ad::Shape{rows * n, 1}), y, mask);
    }

    if (algorithm_ == Algorithm::Qtran) return qtran_loss(tape, batch, tr, q_taken, greedy_chosen, taken_all,
                                                          greedy_all, target);

    // VDN / QMIX.
    ad::Tensor next_max = ad::Tensor::matrix(rows, n);
    for (std::size_t t = 0; t < len; ++t) {
      const auto next = masked_max_rows(target.q[t + 1], batch, t + 1);
      std::copy(next.begin(), next.end(), next_max.data() + t * bsz * n);
    }
    ad::Var q_tot;
    std::vector<double> next_tot(rows);
    if (algorithm_ == Algorithm::Vdn) {
      q_tot = vdn_mix(q_taken);
      for (std::size_t m = 0; m < rows; ++m) {
        for (std::size_t i = 0; i < n; ++i) next_tot[m] += next_max.at(m, i);
      }
    } else {
      q_tot = qmix_.forward(tape, params_, q_taken, tape.constant(states_range(batch, 0, len)));
      ad::Tape tt;
      ad::Var mixed = qmix_.forward(tt, target_params_, tt.constant(next_max), tt.constant(states_range(batch, 1, len + 1)));
      next_tot.assign(mixed.value().storage().begin(), mixed.value().storage().end());
    }
    std::vector<double> y(rows);
    for (std::size_t m = 0; m < rows; ++m) y[m] = td_target(tr.reward[m], gamma, next_tot[m], tr.terminal[m] != 0.0);
    return masked_mse(q_tot, y, tr.filled);
  }

  ad::Var qtran_loss(ad::Tape& tape, const EpisodeBatch& batch, const Transitions& tr, ad::Var q_taken,
                     const std::vector<ad::Var>& greedy_chosen, const std::vector<std::size_t>& taken_all,
                     const std::vector<std::size_t>& greedy_all, const TargetPass& target) {
    const std::size_t bsz = batch.batch, n = env_.n_agents, u = env_.n_actions, len = batch.max_length;
    const std::size_t rows = len * bsz;
    ad::Var states = tape.constant(states_range(batch, 0, len));
    ad::Var onehot_taken = tape.constant(joint_onehot(taken_all, n, u));
    ad::Var onehot_greedy = tape.constant(joint_onehot(greedy_all, n, u));

    ad::Var q_jt = qtran_.joint_q(tape, params_, states, onehot_taken);
    ad::Var q_jt_greedy = qtran_.joint_q(tape, params_, states, onehot_greedy);
    ad::Var v_jt = qtran_.joint_v(tape, params_, states);

    // TD target on the joint network at the target utilities' greedy joint action.
    std::vector<std::size_t> next_greedy;
    for (std::size_t t = 0; t < len; ++t) {
      const auto g = masked_argmax_rows(target.q[t + 1], batch, t + 1);
      next_greedy.insert(next_greedy.end(), g.begin(), g.end());
    }
    ad::Tape tt;
    ad::Var next_q = qtran_.joint_q(tt, target_params_, tt.constant(states_range(batch, 1, len + 1)),
                                    tt.constant(joint_onehot(next_greedy, n, u)));
    std::vector<double> y(rows), non_greedy(rows, 0.0);
    for (std::size_t m = 0; m < rows; ++m) {
      y[m] = td_target(tr.reward[m], config_.gamma, next_q.value()[m], tr.terminal[m] != 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (taken_all[m * n + i] != greedy_all[m * n + i]) non_greedy[m] = 1.0;
      }
    }
    ad::Var td = masked_mse(q_jt, y, tr.filled);
    // The joint network is held fixed inside the constraint terms.
    ad::Var fixed_greedy = ad::detach(q_jt_greedy), fixed_taken = ad::detach(q_jt);
    if (pinned_) {
      ad::Tape pt;
      ad::Var ps = pt.constant(states_range(batch, 0, len));
      fixed_greedy = tape.constant(qtran_.joint_q(pt, *pinned_, ps, pt.constant(joint_onehot(greedy_all, n, u))).value());
      fixed_taken = tape.constant(qtran_.joint_q(pt, *pinned_, ps, pt.constant(joint_onehot(taken_all, n, u))).value());
    }
    const QtranTerms terms = qtran_terms(vdn_mix(ad::concat_rows(greedy_chosen)), fixed_greedy, vdn_mix(q_taken),
                                         fixed_taken, v_jt, tr.filled, non_greedy);
    return ad::add(td, ad::add(ad::scale(terms.opt, config_.qtran_opt_weight),
                               ad::scale(terms.nopt, config_.qtran_nopt_weight)));
  }

  QmixMixer qmix_;
  QtranMixer qtran_;
};

}  // namespace

std::unique_ptr<Learner> make_value_learner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config,
                                            std::mt19937_64& rng) {
  switch (algorithm) {
    case Algorithm::Iql:
    case Algorithm::Vdn:
    case Algorithm::Qmix:
    case Algorithm::Qtran: return std::make_unique<ValueLearner>(algorithm, env, config, rng);
    default: throw std::invalid_argument("not a value-factorization algorithm: " + std::string(to_string(algorithm)));
  }
}

}  // namespace hf::learners::detail
