#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hillfight/autodiff/ops.hpp"
#include "hillfight/replay/episode.hpp"

// Batch slicing shared by the learners. Agent rows at one tick are ordered
// b * N + i; stacked ticks are ordered (t * B + b) for states and
// (t * B + b) * N + i for agent rows.

namespace hf::learners::detail {

using replay::EpisodeBatch;

/// Utility inputs at tick t: [B*N, obs + U + N + extra_dim]. `extra` holds
/// extra_dim values per episode, shared by all agents of that episode.
ad::Tensor inputs_at(const EpisodeBatch& batch, std::size_t t, std::span<const double> extra = {},
                     std::size_t extra_dim = 0);
/// Taken actions at tick t, B*N entries (0 on padding).
std::vector<std::size_t> actions_at(const EpisodeBatch& batch, std::size_t t);
/// Availability as doubles [B*N*U]; rows with nothing allowed (padding) become all ones.
std::vector<double> policy_mask_at(const EpisodeBatch& batch, std::size_t t);
/// States of ticks [t0, t1) stacked as rows (t - t0) * B + b.
ad::Tensor states_range(const EpisodeBatch& batch, std::size_t t0, std::size_t t1);

struct Transitions {
  std::vector<double> reward;    // [L*B]
  std::vector<double> terminal;  // [L*B]
  std::vector<double> filled;    // [L*B]
};
Transitions transitions(const EpisodeBatch& batch);

/// Per agent row at tick t: masked max / min / argmax of q[B*N, U] (0 / 0 / 0 when nothing is allowed).
std::vector<double> masked_max_rows(const ad::Tensor& q, const EpisodeBatch& batch, std::size_t t);
std::vector<double> masked_min_rows(const ad::Tensor& q, const EpisodeBatch& batch, std::size_t t);
std::vector<std::size_t> masked_argmax_rows(const ad::Tensor& q, const EpisodeBatch& batch, std::size_t t);

/// Joint one-hot rows [B, N*U] from per-agent actions (B*N entries).
ad::Tensor joint_onehot(std::span<const std::size_t> actions, std::size_t n_agents, std::size_t n_actions);

/// Each entry of v repeated k times.
std::vector<double> repeat_each(std::span<const double> v, std::size_t k);

/// Row permutation turning (b, i, k) ordered quantile rows into (b, k, i).
std::vector<std::size_t> agent_major_to_fraction_major(std::size_t batch, std::size_t n_agents, std::size_t k);

/// Rows of a [R*K, U] quantile table averaged over each group of K -> [R, U].
ad::Tensor quantile_means(const ad::Tensor& z, std::size_t k);

}  // namespace hf::learners::detail

#include <memory>

#include "hillfight/learners/learner.hpp"

namespace hf::learners::detail {

std::unique_ptr<Learner> make_value_learner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config,
                                            std::mt19937_64& rng);
std::unique_ptr<Learner> make_quantile_learner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config,
                                               std::mt19937_64& rng);
std::unique_ptr<Learner> make_policy_learner(Algorithm algorithm, const EnvInfo& env, const LearnerConfig& config,
                                             std::mt19937_64& rng);

/// Fraction portion used for a quantile algorithm's utilities and targets.
RiskInterval fraction_portion(Algorithm algorithm, const LearnerConfig& config);

}  // namespace hf::learners::detail
