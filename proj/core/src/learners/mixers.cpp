#include "hillfight/learners/mixers.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hf::learners {
namespace {

ad::Var column_constant(ad::Tape& tape, std::span<const double> values) {
  return tape.constant(ad::Tensor(ad::Shape{values.size(), 1}, std::vector<double>(values.begin(), values.end())));
}

ad::Var weighted_mean(ad::Var col, std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  ad::Var weighted = ad::sum(ad::mul(col, column_constant(*col.tape, weights)));
  return ad::scale(weighted, total > 0.0 ? 1.0 / total : 0.0);
}

}  // namespace

ad::Var vdn_mix(ad::Var q) { return ad::sum_cols(q); }

MonotoneWeights MonotoneWeights::repeated(std::size_t k) const {
  if (k == 1) return *this;
  return {ad::repeat_rows(w1, k), ad::repeat_rows(b1, k), ad::repeat_rows(w2, k), ad::repeat_rows(b2, k), embed};
}

QmixMixer QmixMixer::create(ad::ParameterSet& params, const std::string& prefix, std::size_t state_dim,
                            std::size_t n_agents, std::size_t embed, std::mt19937_64& rng) {
  QmixMixer m;
  m.state_dim_ = state_dim;
  m.n_agents_ = n_agents;
  m.embed_ = embed;
  m.hyper_w1 = ad::Dense::create(params, prefix + ".hyper_w1", state_dim, n_agents * embed, rng);
  m.hyper_b1 = ad::Dense::create(params, prefix + ".hyper_b1", state_dim, embed, rng);
  m.hyper_w2 = ad::Dense::create(params, prefix + ".hyper_w2", state_dim, embed, rng);
  m.hyper_v1 = ad::Dense::create(params, prefix + ".hyper_v1", state_dim, embed, rng);
  m.hyper_v2 = ad::Dense::create(params, prefix + ".hyper_v2", embed, 1, rng);
  return m;
}

MonotoneWeights QmixMixer::weights(ad::Tape& tape, ad::ParameterSet& params, ad::Var state) const {
  MonotoneWeights w;
  w.w1 = ad::abs(hyper_w1.forward(tape, params, state));
  w.b1 = hyper_b1.forward(tape, params, state);
  w.w2 = ad::abs(hyper_w2.forward(tape, params, state));
  w.b2 = hyper_v2.forward(tape, params, ad::relu(hyper_v1.forward(tape, params, state)));
  w.embed = embed_;
  return w;
}

ad::Var monotone_mix(ad::Var q, const MonotoneWeights& w) {
  ad::Var hidden = ad::elu(ad::add(ad::batched_vecmat(q, w.w1, w.embed), w.b1));
  return ad::add(ad::sum_cols(ad::mul(hidden, w.w2)), w.b2);
}

ad::Var QmixMixer::forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var q, ad::Var state) const {
  if (q.cols() != n_agents_ || q.rows() != state.rows()) {
    throw ad::DimensionError("mixer expects q[M, " + std::to_string(n_agents_) + "] and matching state rows, got q" +
                             ad::shape_string(q.shape()) + " s" + ad::shape_string(state.shape()));
  }
  return monotone_mix(q, weights(tape, params, state));
}

QtranMixer QtranMixer::create(ad::ParameterSet& params, const std::string& prefix, std::size_t state_dim,
                              std::size_t n_agents, std::size_t n_actions, std::size_t hidden, std::mt19937_64& rng) {
  QtranMixer m;
  m.n_agents_ = n_agents;
  m.n_actions_ = n_actions;
  m.q1 = ad::Dense::create(params, prefix + ".q1", state_dim + n_agents * n_actions, hidden, rng);
  m.q2 = ad::Dense::create(params, prefix + ".q2", hidden, hidden, rng);
  m.q3 = ad::Dense::create(params, prefix + ".q3", hidden, 1, rng);
  m.v1 = ad::Dense::create(params, prefix + ".v1", state_dim, hidden, rng);
  m.v2 = ad::Dense::create(params, prefix + ".v2", hidden, 1, rng);
  return m;
}

ad::Var QtranMixer::joint_q(ad::Tape& tape, ad::ParameterSet& params, ad::Var state, ad::Var joint_onehot) const {
  const ad::Var parts[] = {state, joint_onehot};
  ad::Var x = ad::concat_cols(parts);
  return q3.forward(tape, params, ad::relu(q2.forward(tape, params, ad::relu(q1.forward(tape, params, x)))));
}

ad::Var QtranMixer::joint_v(ad::Tape& tape, ad::ParameterSet& params, ad::Var state) const {
  return v2.forward(tape, params, ad::relu(v1.forward(tape, params, state)));
}

QtranTerms qtran_terms(ad::Var sum_q_greedy, ad::Var q_jt_greedy, ad::Var sum_q_taken, ad::Var q_jt_taken,
                       ad::Var v_jt, std::span<const double> row_mask, std::span<const double> non_greedy) {
  if (row_mask.size() != sum_q_greedy.rows() || non_greedy.size() != row_mask.size()) {
    throw ad::DimensionError("qtran_terms: mask lengths do not match rows");
  }
  ad::Var res_greedy = ad::add(ad::sub(sum_q_greedy, q_jt_greedy), v_jt);
  ad::Var res_taken = ad::add(ad::sub(sum_q_taken, q_jt_taken), v_jt);
  std::vector<double> nopt_weight(row_mask.size());
  for (std::size_t i = 0; i < row_mask.size(); ++i) nopt_weight[i] = row_mask[i] * non_greedy[i];
  return {weighted_mean(ad::square(res_greedy), row_mask),
          weighted_mean(ad::square(ad::min_zero(res_taken)), nopt_weight)};
}

DfacMixer DfacMixer::create(ad::ParameterSet& params, const std::string& prefix, Kind kind, std::size_t state_dim,
                            std::size_t n_agents, std::size_t embed, std::mt19937_64& rng) {
  DfacMixer m;
  m.kind_ = kind;
  m.n_agents_ = n_agents;
  if (kind == Kind::Monotone) {
    m.psi = QmixMixer::create(params, prefix + ".psi", state_dim, n_agents, embed, rng);
    m.shape_w = ad::Dense::create(params, prefix + ".phi", state_dim, n_agents, rng);
  }
  return m;
}

ad::Var DfacMixer::mean_part(ad::Tape& tape, ad::ParameterSet& params, ad::Var means, ad::Var state) const {
  return kind_ == Kind::Sum ? vdn_mix(means) : psi.forward(tape, params, means, state);
}

ad::Var DfacMixer::forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var z, ad::Var state, std::size_t k) const {
  if (k == 0 || z.cols() != n_agents_ || z.rows() != state.rows() * k) {
    throw ad::DimensionError("dfac mixer expects z[M*K, N] for state[M, S], got z" + ad::shape_string(z.shape()) +
                             " s" + ad::shape_string(state.shape()));
  }
  ad::Var means = ad::mean_row_groups(z, k);
  ad::Var shapes = ad::sub(z, ad::repeat_rows(means, k));
  ad::Var mean_term = ad::repeat_rows(mean_part(tape, params, means, state), k);
  ad::Var shape_term = kind_ == Kind::Sum
                           ? ad::sum_cols(shapes)
                           : ad::sum_cols(ad::mul(shapes, ad::repeat_rows(ad::abs(shape_w.forward(tape, params, state)), k)));
  return ad::add(mean_term, shape_term);
}

DrimaMixer DrimaMixer::create(ad::ParameterSet& params, const std::string& prefix, std::size_t state_dim,
                              std::size_t n_agents, std::size_t embed, std::mt19937_64& rng) {
  DrimaMixer m;
  m.mixer = QmixMixer::create(params, prefix, state_dim + 1, n_agents, embed, rng);
  return m;
}

ad::Var DrimaMixer::forward(ad::Tape& tape, ad::ParameterSet& params, ad::Var z, ad::Var state, ad::Var w_agt,
                            std::size_t k) const {
  if (w_agt.cols() != 1 || w_agt.rows() != state.rows() || z.rows() != state.rows() * k) {
    throw ad::DimensionError("drima mixer: inconsistent z" + ad::shape_string(z.shape()) + " s" +
                             ad::shape_string(state.shape()) + " w" + ad::shape_string(w_agt.shape()));
  }
  const ad::Var parts[] = {state, w_agt};
  return monotone_mix(z, mixer.weights(tape, params, ad::concat_cols(parts)).repeated(k));
}

void QuantileDistribution::check() const {
  if (fractions.size() != values.size()) throw std::invalid_argument("quantile fractions and values differ in length");
  for (std::size_t i = 1; i < fractions.size(); ++i) {
    if (!(fractions[i] > fractions[i - 1])) throw std::invalid_argument("quantile fractions must strictly increase");
  }
}

double QuantileDistribution::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace hf::learners
