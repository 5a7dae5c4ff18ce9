#include <stdexcept>

#include "detail.hpp"
#include "hillfight/learners/losses.hpp"
#include "hillfight/learners/mixers.hpp"

namespace hf::learners::detail {
namespace {

/// DIQL, DDN, DMIX and DRIMA-lite: quantile utilities trained by
/// quantile-Huber TD, per agent (DIQL) or on the mixed joint distribution.
/// Every (episode, tick) draws one fraction grid shared by all agents; the
/// target side draws an independent grid.
class QuantileLearner final : public Learner {
 public:
  QuantileLearner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config, std::mt19937_64& rng)
      : Learner(algorithm, env, config) {
    net_ = UtilityNetwork::create(
        params_, "agent",
        {utility_input_size(algorithm, env), env.n_actions, config.hidden, config.quantile_embed}, rng);
    if (algorithm == Algorithm::Ddn || algorithm == Algorithm::Dmix) {
      dfac_ = DfacMixer::create(params_, "mixer",
                                algorithm == Algorithm::Ddn ? DfacMixer::Kind::Sum : DfacMixer::Kind::Monotone,
                                env.state_dim, env.n_agents, config.mixer_embed, rng);
    } else if (algorithm == Algorithm::Drima) {
      drima_ = DrimaMixer::create(params_, "mixer", env.state_dim, env.n_agents, config.mixer_embed, rng);
    }
    phases_.push_back({"quantile_td", &params_, &optimizer_,
                       [this](ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t seed) {
                         return loss(tape, batch, seed);
                       }});
    finish_setup();
  }

 private:
  struct Draws {
    std::vector<std::vector<double>> taus;         // [t][b*K + k], ticks 0..L-1
    std::vector<std::vector<double>> target_taus;  // [t][b*K + k], ticks 1..L stored at t - 1
    std::vector<std::vector<double>> w_agt;        // [t][b], ticks 0..L
  };

  Draws draw(const EpisodeBatch& batch, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    const RiskInterval portion = fraction_portion(algorithm_, config_);
    const std::size_t k = config_.n_quantiles;
    Draws d;
    auto grid = [&] {
      std::vector<double> all;
      for (std::size_t b = 0; b < batch.batch; ++b) {
        const auto taus = sample_fractions(portion, k, rng);
        all.insert(all.end(), taus.begin(), taus.end());
      }
      return all;
    };
    for (std::size_t t = 0; t < batch.max_length; ++t) d.taus.push_back(grid());
    for (std::size_t t = 0; t < batch.max_length; ++t) d.target_taus.push_back(grid());
    if (algorithm_ == Algorithm::Drima) {
      std::uniform_real_distribution<double> w(config_.risk.agent.lower, config_.risk.agent.upper);
      for (std::size_t t = 0; t <= batch.max_length; ++t) {
        std::vector<double> row(batch.batch);
        for (auto& v : row) v = w(rng);
        d.w_agt.push_back(std::move(row));
      }
    }
    return d;
  }

  /// Per-agent fractions: the episode's grid repeated for each agent.
  std::vector<double> agent_taus(const std::vector<double>& grid, std::size_t bsz) const {
    const std::size_t n = env_.n_agents, k = config_.n_quantiles;
    std::vector<double> out;
    out.reserve(bsz * n * k);
    for (std::size_t b = 0; b < bsz; ++b) {
      for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), grid.begin() + b * k, grid.begin() + (b + 1) * k);
    }
    return out;
  }

  ad::Tensor inputs(const EpisodeBatch& batch, std::size_t t, const Draws& d) const {
    if (algorithm_ == Algorithm::Drima) return inputs_at(batch, t, d.w_agt[t], 1);
    return inputs_at(batch, t);
  }

  ad::Var mix(ad::Tape& tape, ad::ParameterSet& params, ad::Var z, ad::Var states, ad::Var w_agt) const {
    const std::size_t k = config_.n_quantiles;
    if (algorithm_ == Algorithm::Drima) return drima_.forward(tape, params, z, states, w_agt, k);
    return dfac_.forward(tape, params, z, states, k);
  }

  ad::Var loss(ad::Tape& tape, const EpisodeBatch& batch, std::uint64_t seed) {
    const std::size_t bsz = batch.batch, n = env_.n_agents, len = batch.max_length, k = config_.n_quantiles;
    const std::size_t rows = len * bsz;
    const Transitions tr = transitions(batch);
    const Draws d = draw(batch, seed);
    const auto permute = agent_major_to_fraction_major(bsz, n, k);
    const bool joint = algorithm_ != Algorithm::Diql;

    // Target side: greedy next actions by quantile mean, then their quantiles.
    std::vector<ad::Tensor> next_z;  // per t: [B*N*K] chosen quantiles, (b, i, k) order
    {
      ad::Tape tt;
      ad::Var h = net_.initial_hidden(tt, bsz * n);
      h = net_.forward_quantiles(tt, target_params_, tt.constant(inputs(batch, 0, d)), h,
                                 agent_taus(d.target_taus[0], bsz), k)
              .hidden;
      for (std::size_t t = 1; t <= len; ++t) {
        auto step = net_.forward_quantiles(tt, target_params_, tt.constant(inputs(batch, t, d)), h,
                                           agent_taus(d.target_taus[t - 1], bsz), k);
        h = ad::detach(step.hidden);
        const auto greedy = masked_argmax_rows(quantile_means(step.values.value(), k), batch, t);
        next_z.push_back(ad::gather_cols(step.values, repeat_index(greedy, k)).value());
      }
    }

    // Online side.
    std::vector<ad::Var> chosen;
    ad::Var h = net_.initial_hidden(tape, bsz * n);
    for (std::size_t t = 0; t < len; ++t) {
      auto step = net_.forward_quantiles(tape, params_, tape.constant(inputs(batch, t, d)), h,
                                         agent_taus(d.taus[t], bsz), k);
      h = step.hidden;
      ad::Var z = ad::gather_cols(step.values, repeat_index(actions_at(batch, t), k));  // [B*N*K, 1]
      chosen.push_back(joint ? ad::reshape(ad::gather_rows(z, permute), ad::Shape{bsz * k, n})
                             : ad::reshape(z, ad::Shape{bsz * n, k}));
    }
    ad::Var pred_all = ad::concat_rows(chosen);

    if (!joint) {
      ad::Tensor tau = ad::Tensor::matrix(rows * n, k);
      ad::Tensor target = ad::Tensor::matrix(rows * n, k);
      std::vector<double> mask(rows * n);
      for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t b = 0; b < bsz; ++b) {
          const std::size_t m = t * bsz + b;
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = m * n + i;
            mask[r] = tr.filled[m];
            for (std::size_t j = 0; j < k; ++j) {
              tau.at(r, j) = d.taus[t][b * k + j];
              target.at(r, j) = td_target(tr.reward[m], config_.gamma, next_z[t][(b * n + i) * k + j],
                                          tr.terminal[m] != 0.0);
            }
          }
        }
      }
      return ad::quantile_huber_loss(pred_all, tau, target, mask);
    }

    ad::Var states = tape.constant(states_range(batch, 0, len));
    ad::Var w_now;
    ad::Tensor w_next;
    if (algorithm_ == Algorithm::Drima) {
      ad::Tensor w = ad::Tensor::matrix(rows, 1);
      w_next = ad::Tensor::matrix(rows, 1);
      for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t b = 0; b < bsz; ++b) {
          w[t * bsz + b] = d.w_agt[t][b];
          w_next[t * bsz + b] = d.w_agt[t + 1][b];
        }
      }
      w_now = tape.constant(std::move(w));
    }
    ad::Var joint_pred = ad::reshape(mix(tape, params_, pred_all, states, w_now), ad::Shape{rows, k});

    // Joint target distribution on the target mixer.
    ad::Tensor next_all = ad::Tensor::matrix(rows * k, n);
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t r = 0; r < bsz * k * n; ++r) next_all[t * bsz * k * n + r] = next_z[t][permute[r]];
    }
    ad::Tape tt;
    ad::Var w_next_var = algorithm_ == Algorithm::Drima ? tt.constant(w_next) : ad::Var{};
    ad::Var next_joint = mix(tt, target_params_, tt.constant(next_all), tt.constant(states_range(batch, 1, len + 1)),
                             w_next_var);
    ad::Tensor tau = ad::Tensor::matrix(rows, k);
    ad::Tensor target = ad::Tensor::matrix(rows, k);
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t m = t * bsz + b;
        for (std::size_t j = 0; j < k; ++j) {
          tau.at(m, j) = d.taus[t][b * k + j];
          target.at(m, j) =
              td_target(tr.reward[m], config_.gamma, next_joint.value()[m * k + j], tr.terminal[m] != 0.0);
        }
      }
    }
    return ad::quantile_huber_loss(joint_pred, tau, target, tr.filled);
  }

  static std::vector<std::size_t> repeat_index(const std::vector<std::size_t>& index, std::size_t k) {
    std::vector<std::size_t> out;
    out.reserve(index.size() * k);
    for (std::size_t a : index) out.insert(out.end(), k, a);
    return out;
  }

  DfacMixer dfac_;
  DrimaMixer drima_;
};

}  // namespace

std::unique_ptr<Learner> make_quantile_learner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config,
                                               std::mt19937_64& rng) {
  if (!is_distributional(algorithm)) {
    throw std::invalid_argument("not a distributional algorithm: " + std::string(to_string(algorithm)));
  }
  return std::make_unique<QuantileLearner>(algorithm, env, config, rng);
}

}  // namespace hf::learners::detail
