#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hillfight/autodiff/nn.hpp"

namespace hf::learners {

/// Sum of per-agent values: q[M, N] -> [M, 1].
ad::Var vdn_mix(ad::Var q);

/// State-conditioned weights of a two-layer monotone mixer.
struct MonotoneWeights {
  ad::Var w1;  // [M, N*E], non-negative
  ad::Var b1;  // [M, E]
  ad::Var w2;  // [M, E], non-negative
  ad::Var b2;  // [M, 1]
  std::size_t embed = 0;
  /// Each row repeated k times, for mixing k quantile rows per state.
  MonotoneWeights repeated(std::size_t k) const;
};

/// Q_joint = |W2(s)| · elu(q |W1(s)| + b1(s)) + V(s), one state row per q row.
class QmixMixer {
 public:
  QmixMixer() = default;
  static QmixMixer create(ad::ParameterSet& params, const std::string& prefix, std::size_t state_dim,
                          std::size_t n_agents, std::size_t embed, std::mt19937_64& rng);

  std::size_t state_dim() const noexcept { return state_dim_; }
  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t embed() const noexcept { return embed_; }

  MonotoneWeights weights(ad::Tape& tape, ad::ParameterSet& params, ad::Var state) const;
  ad::Var forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var q, ad::Var state) const;

  // Parameter indices, exposed so tests can pin the hypernetworks.
  ad::Dense hyper_w1;
  ad::Dense hyper_b1;
  ad::Dense hyper_w2;
  ad::Dense hyper_v1;
  ad::Dense hyper_v2;

 private:
  std::size_t state_dim_ = 0;
  std::size_t n_agents_ = 0;
  std::size_t embed_ = 0;
};

/// Mixes q[M, N] with precomputed weights.
ad::Var monotone_mix(ad::Var q, const MonotoneWeights& w);

/// Joint action-value and state-value networks of the transformation method.
class QtranMixer {
 public:
  QtranMixer() = default;
  static QtranMixer create(ad::ParameterSet& params, const std::string& prefix, std::size_t state_dim,
                           std::size_t n_agents, std::size_t n_actions, std::size_t hidden, std::mt19937_64& rng);

  /// Q_jt(s, u) with u given as concatenated one-hot rows [M, N*U].
  ad::Var joint_q(ad::Tape& tape, ad::ParameterSet& params, ad::Var state, ad::Var joint_onehot) const;
  ad::Var joint_v(ad::Tape& tape, ad::ParameterSet& params, ad::Var state) const;

  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t n_actions() const noexcept { return n_actions_; }

  ad::Dense q1, q2, q3;
  ad::Dense v1, v2;

 private:
  std::size_t n_agents_ = 0;
  std::size_t n_actions_ = 0;
};

struct QtranTerms {
  ad::Var opt;   // mean of residual(u_greedy)^2
  ad::Var nopt;  // mean over non-greedy rows of min(residual(u), 0)^2
};

/// residual(u) = sum_i Q_i(u_i) - Q_jt(u) + V_jt. All inputs are [M, 1].
/// `row_mask` weights rows (padding = 0); `non_greedy` marks rows whose taken
/// joint action differs from the greedy one.
QtranTerms qtran_terms(ad::Var sum_q_greedy, ad::Var q_jt_greedy, ad::Var sum_q_taken, ad::Var q_jt_taken,
                       ad::Var v_jt, std::span<const double> row_mask, std::span<const double> non_greedy);

/// Mean-shape mixer. The joint quantile at fraction tau is
/// psi(means) + Phi(Z_i(tau) - mean_i), where psi is a plain sum (DDN) or a
/// monotone state-conditioned mixer (DMIX), and Phi is a bias-free linear
/// mix with non-negative weights (all ones for DDN).
class DfacMixer {
 public:
  enum class Kind { Sum, Monotone };

  DfacMixer() = default;
  static DfacMixer create(ad::ParameterSet& params, const std::string& prefix, Kind kind, std::size_t state_dim,
                          std::size_t n_agents, std::size_t embed, std::mt19937_64& rng);

  Kind kind() const noexcept { return kind_; }

  /// z[M*K, N]: K quantile rows per state row, every agent evaluated at the
  /// same fractions. Returns the joint quantiles [M*K, 1].
  ad::Var forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var z, ad::Var state, std::size_t k) const;
  /// psi(means) for means[M, N].
  ad::Var mean_part(ad::Tape& tape, ad::ParameterSet& params, ad::Var means, ad::Var state) const;

  QmixMixer psi;
  ad::Dense shape_w;

 private:
  Kind kind_ = Kind::Sum;
  std::size_t n_agents_ = 0;
};

/// Transformed action-value mixer: monotone mixing whose hypernetworks read
/// the state together with the agent-wise risk level.
class DrimaMixer {
 public:
  DrimaMixer() = default;
  static DrimaMixer create(ad::ParameterSet& params, const std::string& prefix, std::size_t state_dim,
                           std::size_t n_agents, std::size_t embed, std::mt19937_64& rng);

  /// z[M*K, N] at shared fractions, state[M, S], w_agt[M, 1] -> [M*K, 1].
  ad::Var forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var z, ad::Var state, ad::Var w_agt,
                  std::size_t k) const;

  QmixMixer mixer;
};

/// Fractions and values of one sampled return distribution.
struct QuantileDistribution {
  std::vector<double> fractions;
  std::vector<double> values;

  /// Throws std::invalid_argument unless fractions are strictly increasing
  /// and the lengths agree.
  void check() const;
  double mean() const;
};

}  // namespace hf::learners
