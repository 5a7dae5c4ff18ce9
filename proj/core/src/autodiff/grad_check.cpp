#include "hillfight/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hf::ad {
namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape;
  return loss(tape).value().item();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss, ParameterSet& params, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check requires eps > 0");

  params.zero_grad();
  {
    Tape tape;
    Var out = loss(tape);
    tape.backward(out);
  }
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Parameter& param = params[p];
    if (!param.requires_grad) continue;
    for (std::size_t k = 0; k < param.value.size(); ++k) {
      const double analytic = param.grad[k];
      if (!std::isfinite(analytic)) throw NumericError("non-finite analytic gradient in " + param.name);
      const double original = param.value[k];
      param.value[k] = original + eps;
      const double up = evaluate(loss);
      param.value[k] = original - eps;
      const double down = evaluate(loss);
      param.value[k] = original;
      const double numeric = (up - down) / (2.0 * eps);
      if (!std::isfinite(numeric)) throw NumericError("non-finite numeric gradient in " + param.name);
      const double err = std::fabs(analytic - numeric) / std::max(1.0, std::fabs(analytic));
      if (err >= report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = param.name;
        report.worst_index = k;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace hf::ad
