#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "hillfight/autodiff/parameter.hpp"
#include "hillfight/autodiff/tensor.hpp"

namespace hf::ad {

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Records operations in execution order. Node inputs always precede the
/// node, so a reverse sweep over the node list is a valid topological
/// backward pass that touches each node once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  Var constant(Tensor value);
  /// Leaf bound to a parameter. Repeated calls for the same parameter return
  /// the same leaf, so unrolled networks share one node per weight.
  Var param(Parameter& p);

  /// Records an op output. `backward` is invoked only if the output requires a gradient.
  Var push(Tensor value, bool requires_grad, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, allocated on first use.
  Tensor& grad(std::uint32_t id);
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }

  /// Seeds d(loss)/d(loss) = 1 and accumulates into every reachable parameter's grad.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() {
    nodes_.clear();
    param_nodes_.clear();
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

}  // namespace hf::ad
