#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "hillfight/autodiff/ops.hpp"
#include "hillfight/autodiff/parameter.hpp"

namespace hf::ad {

/// Fully connected layer bound to two entries of a ParameterSet.
struct Dense {
  std::size_t w = 0;
  std::size_t b = 0;
  std::size_t in = 0;
  std::size_t out = 0;

  static Dense create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                      std::mt19937_64& rng);
  Var forward(Tape& tape, ParameterSet& params, Var x) const;
};

/// Gated recurrent unit with fused gate matrices laid out as [reset | update | candidate].
struct GRUCell {
  std::size_t w_input = 0;   // [in, 3H]
  std::size_t w_hidden = 0;  // [H, 3H]
  std::size_t b_input = 0;   // [3H]
  std::size_t b_hidden = 0;  // [3H]
  std::size_t in = 0;
  std::size_t hidden = 0;

  static GRUCell create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                        std::mt19937_64& rng);
  Var forward(Tape& tape, ParameterSet& params, Var x, Var h) const;
};

/// r = sigmoid(x Wr + h Ur + b), z = sigmoid(x Wz + h Uz + b),
/// n = tanh(x Wn + bn + r * (h Un + bun)), h' = (1 - z) * n + z * h.
Var gru_cell(Var x, Var h, Var w_input, Var w_hidden, Var b_input, Var b_hidden);

/// RMSProp: s = decay * s + (1 - decay) * g^2; p -= lr * g / (sqrt(s) + eps).
class RMSProp {
 public:
  struct Options {
    double lr = 5e-4;
    double decay = 0.99;
    double eps = 1e-5;
    double grad_clip = 10.0;  // global-norm clip; <= 0 disables
  };

  RMSProp() = default;
  explicit RMSProp(Options options) : options_(options) {}

  /// Clips, applies one update, and returns the pre-clip gradient norm.
  double step(ParameterSet& params);
  const Options& options() const noexcept { return options_; }

 private:
  Options options_;
  std::vector<Tensor> square_avg_;
};

}  // namespace hf::ad
