#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace hf::replay {

enum class EpsilonKind : std::uint8_t { Linear, Exponential, Piecewise };

struct EpsilonSchedule {
  EpsilonKind kind = EpsilonKind::Linear;
  double start = 1.0;
  double end = 0.05;
  std::int64_t anneal_steps = 50000;
  /// Piecewise knots (step, value), strictly increasing steps and
  /// non-increasing values; held constant outside the knot range.
  std::vector<std::pair<std::int64_t, double>> knots = {{0, 1.0}, {10000, 0.1}, {50000, 0.05}};

  double value(std::int64_t step) const;
  /// Empty when the schedule is well-formed.
  std::vector<const char*> problems() const;
};

enum class BufferMode : std::uint8_t { Episodic, Parallel };

struct UpdateCadence {
  int behavior_interval = 1;  // episodes between learner updates
  int target_interval = 200;  // episodes between hard target copies
  friend bool operator==(UpdateCadence, UpdateCadence) = default;
};

UpdateCadence update_cadence(BufferMode mode);
int default_runners(BufferMode mode);

}  // namespace hf::replay
