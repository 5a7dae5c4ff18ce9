#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "hillfight/learners/losses.hpp"

namespace hf::test {

/// Exhaustive joint-action check: the joint value at the per-agent greedy
/// action must match the best value over every joint action (all actions
/// legal). `joint_value` maps a joint action to the mixed value.
inline bool greedy_attains_joint_max(const std::vector<std::vector<double>>& utilities,
                                     const std::function<double(const std::vector<std::size_t>&)>& joint_value,
                                     double tol = 1e-9) {
  const std::size_t n = utilities.size();
  std::vector<std::vector<std::uint8_t>> masks;
  for (const auto& u : utilities) masks.emplace_back(u.size(), 1);
  const double at_greedy = joint_value(learners::greedy_joint_action(utilities, masks));

  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    best = std::max(best, joint_value(idx));
    std::size_t pos = 0;
    while (pos < n && ++idx[pos] == utilities[pos].size()) idx[pos++] = 0;
    if (pos == n) break;
  }
  return at_greedy >= best - tol;
}

}  // namespace hf::test
