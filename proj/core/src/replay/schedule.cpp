#include "hillfight/replay/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace hf::replay {

double EpsilonSchedule::value(std::int64_t step) const {
  step = std::max<std::int64_t>(step, 0);
  switch (kind) {
    case EpsilonKind::Linear: {
      if (anneal_steps <= 0 || step >= anneal_steps) return end;
      const double frac = static_cast<double>(step) / static_cast<double>(anneal_steps);
      return start + (end - start) * frac;
    }
    case EpsilonKind::Exponential: {
      // Rate chosen so the schedule sits 0.01 above `end` at anneal_steps.
      const double gap = start - end;
      if (anneal_steps <= 0 || gap <= 0.01) return step >= anneal_steps ? end : start;
      const double kappa = static_cast<double>(anneal_steps) / std::log(gap / 0.01);
      return end + gap * std::exp(-static_cast<double>(step) / kappa);
    }
    case EpsilonKind::Piecewise: {
      if (knots.empty()) return end;
      if (step <= knots.front().first) return knots.front().second;
      for (std::size_t i = 1; i < knots.size(); ++i) {
        const auto [s1, v1] = knots[i];
        if (step <= s1) {
          const auto [s0, v0] = knots[i - 1];
          const double frac = static_cast<double>(step - s0) / static_cast<double>(s1 - s0);
          return v0 + (v1 - v0) * frac;
        }
      }
      return knots.back().second;
    }
  }
  return end;
}

std::vector<const char*> EpsilonSchedule::problems() const {
  std::vector<const char*> out;
  if (!(start >= end)) out.push_back("epsilon start must be >= end");
  if (start > 1.0 || end < 0.0) out.push_back("epsilon must stay within [0, 1]");
  if (anneal_steps < 0) out.push_back("anneal steps must be non-negative");
  if (kind == EpsilonKind::Piecewise) {
    if (knots.empty()) out.push_back("piecewise schedule needs knots");
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (knots[i].first <= knots[i - 1].first) out.push_back("knot steps must increase");
      if (knots[i].second > knots[i - 1].second) out.push_back("knot values must not increase");
    }
  }
  return out;
}

UpdateCadence update_cadence(BufferMode mode) {
  return mode == BufferMode::Episodic ? UpdateCadence{1, 200} : UpdateCadence{20, 200};
}

int default_runners(BufferMode mode) { return mode == BufferMode::Episodic ? 1 : 20; }

}  // namespace hf::replay
