#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hillfight/autodiff/ops.hpp"
#include "hillfight/learners/mixers.hpp"

namespace hf::learners {

/// r + gamma * (1 - terminal) * next.
double td_target(double reward, double gamma, double next_value, bool terminal);

/// Q(chosen) - sum_u pi(u) Q(u), the counterfactual baseline with the other agents' actions fixed.
double coma_advantage(std::span<const double> q_row, std::span<const double> pi, std::size_t chosen);

/// Quantile-Huber loss (kappa = 1) of one predicted distribution against target samples,
/// averaged over (fraction, target) pairs.
double quantile_regression_loss(const QuantileDistribution& predicted, std::span<const double> targets);

/// Per-agent masked argmax, ties to the lowest index. For monotone mixers this
/// is also the maximiser of the mixed joint value.
std::vector<std::size_t> greedy_joint_action(const std::vector<std::vector<double>>& utilities,
                                             const std::vector<std::vector<std::uint8_t>>& masks);

/// Mask row as doubles (1 allowed, 0 not).
std::vector<double> mask_to_double(std::span<const std::uint8_t> mask);

/// Per-row sum_u pi(u) log pi(u) over R = M*N agent rows, summed per state row -> [M, 1].
ad::Var policy_neg_entropy(ad::Var probs, ad::Var log_probs, std::size_t n_agents);

/// Soft actor-critic objective per state row: alpha * sum_i sum_u pi log pi - Q_tot,
/// masked mean over rows.
ad::Var masac_policy_loss(ad::Var neg_entropy, ad::Var q_tot, double alpha, std::span<const double> row_mask);

/// Mean squared error between column predictions and constant targets, masked.
ad::Var masked_mse(ad::Var pred, std::span<const double> targets, std::span<const double> row_mask);

/// Standard Gumbel noise, one value per entry of a rows x cols table.
ad::Tensor sample_gumbel(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

/// Relaxed one-hot sample: masked softmax((logits + noise) / temperature).
ad::Var gumbel_softmax(ad::Var logits, const ad::Tensor& noise, std::span<const double> mask, double temperature);

}  // namespace hf::learners
