#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "hillfight/autodiff/parameter.hpp"
#include "hillfight/autodiff/tape.hpp"

namespace hf::ad {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Builds a scalar loss on the given tape from the parameter set.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients with central differences of step `eps`
/// for every scalar of every parameter. The error per entry is
/// |analytic - numeric| / max(1, |analytic|). The loss must be a pure
/// function of the parameter values (any randomness fixed inside `loss`).
GradCheckReport grad_check(const LossBuilder& loss, ParameterSet& params, double eps = 1e-5);

}  // namespace hf::ad
