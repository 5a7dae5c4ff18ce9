#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hillfight/autodiff/nn.hpp"

namespace hf::learners {

struct UtilityConfig {
  std::size_t input_dim = 0;
  std::size_t n_actions = 0;
  std::size_t hidden = 64;
  /// Cosine features of the quantile head; 0 builds a plain per-action head.
  std::size_t quantile_embed = 0;
};

/// Recurrent per-agent utility: dense -> relu -> GRU -> dense. In quantile
/// mode the hidden state is modulated by an embedding of the fraction tau
/// before the output layer, giving one value per (tau, action).
class UtilityNetwork {
 public:
  UtilityNetwork() = default;
  static UtilityNetwork create(ad::ParameterSet& params, const std::string& prefix, const UtilityConfig& config,
                               std::mt19937_64& rng);

  const UtilityConfig& config() const noexcept { return config_; }
  bool distributional() const noexcept { return config_.quantile_embed > 0; }

  struct Output {
    ad::Var values;  // [R, U], or [R*K, U] with row r*K + k at fraction k of row r
    ad::Var hidden;  // [R, H]
  };

  ad::Var initial_hidden(ad::Tape& tape, std::size_t rows) const;

  /// One recurrent step for R input rows [R, input_dim].
  Output forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var x, ad::Var h) const;
  /// Quantile step: `taus` holds R*K fractions, K consecutive per input row.
  Output forward_quantiles(ad::Tape& tape, ad::ParameterSet& params, ad::Var x, ad::Var h,
                           std::span<const double> taus, std::size_t k) const;

 private:
  ad::Var encode(ad::Tape& tape, ad::ParameterSet& params, ad::Var x, ad::Var h) const;

  UtilityConfig config_;
  ad::Dense input_;
  ad::GRUCell gru_;
  ad::Dense output_;
  ad::Dense tau_embed_;
};

/// Index of the largest allowed entry, ties to the lowest index. Returns
/// values.size() when nothing is allowed.
std::size_t masked_argmax(std::span<const double> values, std::span<const std::uint8_t> mask);

/// Utility network input row: observation | one-hot last action | one-hot agent id [| extra].
std::vector<double> agent_input(std::span<const double> obs, int last_action, std::size_t n_actions,
                                std::size_t agent, std::size_t n_agents, std::span<const double> extra = {});
std::size_t agent_input_size(std::size_t obs_dim, std::size_t n_actions, std::size_t n_agents,
                             std::size_t extra = 0);

}  // namespace hf::learners
