#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hillfight/combat/engine.hpp"

namespace hf::combat {

/// One line of a replay log: the post-step world snapshot of a tick.
struct ReplayUnit {
  std::size_t id = 0;
  Team team = Team::Ally;
  double x = 0.0;
  double y = 0.0;
  double health = 0.0;
  bool sieged = false;
  int action = 0;
};

struct ReplayRecord {
  int tick = 0;
  std::vector<ReplayUnit> units;
  std::vector<Event> events;
};

ReplayRecord make_replay_record(const WorldState& world, const StepResult& step);

/// JSON object on a single line, no trailing newline.
std::string to_json_line(const ReplayRecord& record);
ReplayRecord parse_json_line(const std::string& line);

/// Reads every non-empty line of a replay stream.
std::vector<ReplayRecord> read_replay(std::istream& in);

}  // namespace hf::combat
