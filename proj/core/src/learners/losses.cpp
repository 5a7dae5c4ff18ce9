#include "hillfight/learners/losses.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hillfight/learners/agent_net.hpp"

namespace hf::learners {

double td_target(double reward, double gamma, double next_value, bool terminal) {
  return reward + (terminal ? 0.0 : gamma * next_value);
}

double coma_advantage(std::span<const double> q_row, std::span<const double> pi, std::size_t chosen) {
  if (q_row.size() != pi.size() || chosen >= q_row.size()) throw std::invalid_argument("coma_advantage: bad sizes");
  double baseline = 0.0;
  for (std::size_t u = 0; u < q_row.size(); ++u) baseline += pi[u] * q_row[u];
  return q_row[chosen] - baseline;
}

double quantile_regression_loss(const QuantileDistribution& predicted, std::span<const double> targets) {
  predicted.check();
  const std::size_t k = predicted.values.size();
  if (k == 0 || targets.empty()) return 0.0;
  ad::Tape tape;
  ad::Var pred = tape.constant(ad::Tensor(ad::Shape{1, k}, predicted.values));
  const ad::Tensor tau(ad::Shape{1, k}, predicted.fractions);
  const ad::Tensor target(ad::Shape{1, targets.size()}, std::vector<double>(targets.begin(), targets.end()));
  const double mask[] = {1.0};
  return ad::quantile_huber_loss(pred, tau, target, mask).value().item();
}

std::vector<std::size_t> greedy_joint_action(const std::vector<std::vector<double>>& utilities,
                                             const std::vector<std::vector<std::uint8_t>>& masks) {
  if (utilities.size() != masks.size()) throw std::invalid_argument("greedy_joint_action: one mask per agent");
  std::vector<std::size_t> joint(utilities.size());
  for (std::size_t i = 0; i < utilities.size(); ++i) joint[i] = masked_argmax(utilities[i], masks[i]);
  return joint;
}

std::vector<double> mask_to_double(std::span<const std::uint8_t> mask) {
  std::vector<double> out(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return out;
}

ad::Var policy_neg_entropy(ad::Var probs, ad::Var log_probs, std::size_t n_agents) {
  if (probs.rows() % n_agents != 0) throw ad::DimensionError("policy rows are not a multiple of the agent count");
  ad::Var per_agent = ad::sum_cols(ad::mul(probs, log_probs));
  return ad::sum_cols(ad::reshape(per_agent, ad::Shape{probs.rows() / n_agents, n_agents}));
}

ad::Var masked_mse(ad::Var pred, std::span<const double> targets, std::span<const double> row_mask) {
  if (pred.cols() != 1 || targets.size() != pred.rows() || row_mask.size() != pred.rows()) {
    throw ad::DimensionError("masked_mse expects a column and matching targets and mask");
  }
  ad::Tape& tape = *pred.tape;
  const std::size_t m = pred.rows();
  ad::Var y = tape.constant(ad::Tensor(ad::Shape{m, 1}, std::vector<double>(targets.begin(), targets.end())));
  ad::Var w = tape.constant(ad::Tensor(ad::Shape{m, 1}, std::vector<double>(row_mask.begin(), row_mask.end())));
  const double total = std::accumulate(row_mask.begin(), row_mask.end(), 0.0);
  return ad::scale(ad::sum(ad::mul(ad::square(ad::sub(pred, y)), w)), total > 0.0 ? 1.0 / total : 0.0);
}

ad::Var masac_policy_loss(ad::Var neg_entropy, ad::Var q_tot, double alpha, std::span<const double> row_mask) {
  if (alpha < 0.0) throw std::invalid_argument("entropy temperature must be non-negative");
  if (neg_entropy.rows() != q_tot.rows() || row_mask.size() != q_tot.rows()) {
    throw ad::DimensionError("masac_policy_loss: row mismatch");
  }
  ad::Tape& tape = *q_tot.tape;
  ad::Var per_row = ad::sub(ad::scale(neg_entropy, alpha), q_tot);
  ad::Var w = tape.constant(ad::Tensor(ad::Shape{row_mask.size(), 1}, std::vector<double>(row_mask.begin(), row_mask.end())));
  const double total = std::accumulate(row_mask.begin(), row_mask.end(), 0.0);
  return ad::scale(ad::sum(ad::mul(per_row, w)), total > 0.0 ? 1.0 / total : 0.0);
}

ad::Tensor sample_gumbel(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1e-12, 1.0);
  ad::Tensor noise = ad::Tensor::matrix(rows, cols);
  for (auto& g : noise.storage()) g = -std::log(-std::log(u(rng)));
  return noise;
}

ad::Var gumbel_softmax(ad::Var logits, const ad::Tensor& noise, std::span<const double> mask, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("gumbel temperature must be positive");
  ad::Var perturbed = ad::add(logits, logits.tape->constant(noise));
  return ad::masked_softmax(ad::scale(perturbed, 1.0 / temperature), mask);
}

}  // namespace hf::learners
