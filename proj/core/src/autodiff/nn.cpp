#include "hillfight/autodiff/nn.hpp"

#include <cmath>

namespace hf::ad {

Dense Dense::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                    std::mt19937_64& rng) {
  Dense d;
  d.in = in;
  d.out = out;
  d.w = params.add_uniform(name + ".w", Shape{in, out}, in, rng);
  d.b = params.add_uniform(name + ".b", Shape{out}, in, rng);
  return d;
}

Var Dense::forward(Tape& tape, ParameterSet& params, Var x) const {
  if (x.cols() != in) {
    throw DimensionError("dense layer expects " + std::to_string(in) + " inputs, got " + shape_string(x.shape()));
  }
  return dense_forward(x, tape.param(params[w]), tape.param(params[b]));
}

GRUCell GRUCell::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                        std::mt19937_64& rng) {
  GRUCell g;
  g.in = in;
  g.hidden = hidden;
  g.w_input = params.add_uniform(name + ".w_input", Shape{in, 3 * hidden}, in, rng);
  g.w_hidden = params.add_uniform(name + ".w_hidden", Shape{hidden, 3 * hidden}, hidden, rng);
  g.b_input = params.add_uniform(name + ".b_input", Shape{3 * hidden}, hidden, rng);
  g.b_hidden = params.add_uniform(name + ".b_hidden", Shape{3 * hidden}, hidden, rng);
  return g;
}

Var GRUCell::forward(Tape& tape, ParameterSet& params, Var x, Var h) const {
  return gru_cell(x, h, tape.param(params[w_input]), tape.param(params[w_hidden]), tape.param(params[b_input]),
                  tape.param(params[b_hidden]));
}

Var gru_cell(Var x, Var h, Var w_input, Var w_hidden, Var b_input, Var b_hidden) {
  const std::size_t hid = h.cols();
  if (w_hidden.value().rows() != hid || w_hidden.value().cols() != 3 * hid || w_input.value().cols() != 3 * hid ||
      w_input.value().rows() != x.cols() || x.rows() != h.rows()) {
    throw DimensionError("gru_cell: inconsistent shapes x" + shape_string(x.shape()) + " h" + shape_string(h.shape()) +
                         " Wi" + shape_string(w_input.shape()) + " Wh" + shape_string(w_hidden.shape()));
  }
  Var gi = dense_forward(x, w_input, b_input);
  Var gh = dense_forward(h, w_hidden, b_hidden);
  Var r = sigmoid(add(slice_cols(gi, 0, hid), slice_cols(gh, 0, hid)));
  Var z = sigmoid(add(slice_cols(gi, hid, 2 * hid), slice_cols(gh, hid, 2 * hid)));
  Var n = tanh(add(slice_cols(gi, 2 * hid, 3 * hid), mul(r, slice_cols(gh, 2 * hid, 3 * hid))));
  return add(n, mul(z, sub(h, n)));
}

double RMSProp::step(ParameterSet& params) {
  const double norm = params.clip_grad_norm(options_.grad_clip);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm");
  if (square_avg_.size() != params.size()) {
    square_avg_.clear();
    for (const auto& p : params) square_avg_.emplace_back(p.value.shape(), 0.0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.requires_grad) continue;
    Tensor& s = square_avg_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      s[k] = options_.decay * s[k] + (1.0 - options_.decay) * g * g;
      p.value[k] -= options_.lr * g / (std::sqrt(s[k]) + options_.eps);
    }
  }
  return norm;
}

}  // namespace hf::ad
