#include "hillfight/learners/agent_net.hpp"

#include <algorithm>

#include "hillfight/learners/risk.hpp"

namespace hf::learners {

UtilityNetwork UtilityNetwork::create(ad::ParameterSet& params, const std::string& prefix, const UtilityConfig& config,
                                      std::mt19937_64& rng) {
  if (config.input_dim == 0 || config.n_actions == 0 || config.hidden == 0) {
    throw ad::DimensionError("utility network needs positive input, action and hidden sizes");
  }
  UtilityNetwork net;
  net.config_ = config;
  net.input_ = ad::Dense::create(params, prefix + ".fc1", config.input_dim, config.hidden, rng);
  net.gru_ = ad::GRUCell::create(params, prefix + ".rnn", config.hidden, config.hidden, rng);
  net.output_ = ad::Dense::create(params, prefix + ".fc2", config.hidden, config.n_actions, rng);
  if (config.quantile_embed > 0) {
    net.tau_embed_ = ad::Dense::create(params, prefix + ".phi", config.quantile_embed, config.hidden, rng);
  }
  return net;
}

ad::Var UtilityNetwork::initial_hidden(ad::Tape& tape, std::size_t rows) const {
  return tape.constant(ad::Tensor::matrix(rows, config_.hidden));
}

ad::Var UtilityNetwork::encode(ad::Tape& tape, ad::ParameterSet& params, ad::Var x, ad::Var h) const {
  if (x.cols() != config_.input_dim) {
    throw ad::DimensionError("utility network expects " + std::to_string(config_.input_dim) + " inputs, got " +
                             ad::shape_string(x.shape()));
  }
  return gru_.forward(tape, params, ad::relu(input_.forward(tape, params, x)), h);
}

UtilityNetwork::Output UtilityNetwork::forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var x, ad::Var h) const {
  if (distributional()) throw ad::DimensionError("quantile network evaluated without fractions");
  ad::Var next = encode(tape, params, x, h);
  return {output_.forward(tape, params, next), next};
}

UtilityNetwork::Output UtilityNetwork::forward_quantiles(ad::Tape& tape, ad::ParameterSet& params, ad::Var x,
                                                         ad::Var h, std::span<const double> taus,
                                                         std::size_t k) const {
  if (!distributional()) throw ad::DimensionError("plain utility network evaluated with fractions");
  if (k == 0 || taus.size() != x.rows() * k) throw ad::DimensionError("quantile fractions do not match input rows");
  ad::Var next = encode(tape, params, x, h);
  const std::vector<double> tau_list(taus.begin(), taus.end());
  ad::Var phi = ad::relu(tau_embed_.forward(tape, params, tape.constant(cosine_embedding(tau_list, config_.quantile_embed))));
  ad::Var mixed = ad::mul(ad::repeat_rows(next, k), phi);
  return {output_.forward(tape, params, mixed), next};
}

std::size_t masked_argmax(std::span<const double> values, std::span<const std::uint8_t> mask) {
  std::size_t best = values.size();
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (a < mask.size() && mask[a] == 0) continue;
    if (best == values.size() || values[a] > values[best]) best = a;
  }
  return best;
}

std::vector<double> agent_input(std::span<const double> obs, int last_action, std::size_t n_actions,
                                std::size_t agent, std::size_t n_agents, std::span<const double> extra) {
  std::vector<double> row(agent_input_size(obs.size(), n_actions, n_agents, extra.size()), 0.0);
  std::copy(obs.begin(), obs.end(), row.begin());
  if (last_action >= 0 && static_cast<std::size_t>(last_action) < n_actions) row[obs.size() + last_action] = 1.0;
  row[obs.size() + n_actions + agent] = 1.0;
  std::copy(extra.begin(), extra.end(), row.begin() + static_cast<std::ptrdiff_t>(obs.size() + n_actions + n_agents));
  return row;
}

std::size_t agent_input_size(std::size_t obs_dim, std::size_t n_actions, std::size_t n_agents, std::size_t extra) {
  return obs_dim + n_actions + n_agents + extra;
}

}  // namespace hf::learners
