#include "hillfight/autodiff/tape.hpp"

#include <cmath>

namespace hf::ad {

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::param(Parameter& p) {
  if (const auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  Var v = push(p.value, p.requires_grad, nullptr);
  nodes_.back().param = &p;
  param_nodes_.emplace(&p, v.id);
  return v;
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced on tape node " + std::to_string(nodes_.size()));
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward on a foreign tape variable");
  if (value(loss).size() != 1) throw DimensionError("backward requires a scalar loss, got " + shape_string(value(loss).shape()));
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id).fill(1.0);
  for (std::int64_t i = loss.id; i >= 0; --i) {
    const auto id = static_cast<std::uint32_t>(i);
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param != nullptr) {
      auto dst = n.param->grad.values();
      auto src = n.grad.values();
      for (std::size_t k = 0; k < dst.size(); ++k) {
        if (!std::isfinite(src[k])) throw NumericError("non-finite gradient for parameter " + n.param->name);
        dst[k] += src[k];
      }
    } else if (n.backward) {
      n.backward(*this, id);
    }
  }
}

}  // namespace hf::ad
