#include "hillfight/combat/replay.hpp"

#include <istream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hf::combat {
namespace {

using nlohmann::json;

Event::Kind parse_kind(const std::string& s) {
  for (auto k : {Event::Kind::Hit, Event::Kind::Miss, Event::Kind::Kill, Event::Kind::BuildingDestroyed,
                 Event::Kind::SiegeToggle}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown replay event kind: " + s);
}

}  // namespace

ReplayRecord make_replay_record(const WorldState& world, const StepResult& step) {
  ReplayRecord rec;
  rec.tick = world.tick;
  rec.units.reserve(world.units.size());
  for (const auto& u : world.units) {
    rec.units.push_back({u.id, u.team, u.pos.x, u.pos.y, u.health, u.sieged,
                         u.id < step.actions.size() ? step.actions[u.id] : u.last_action});
  }
  rec.events = step.events;
  return rec;
}

std::string to_json_line(const ReplayRecord& record) {
  json j;
  j["tick"] = record.tick;
  json units = json::array();
  for (const auto& u : record.units) {
    units.push_back({{"id", u.id},
                     {"team", u.team == Team::Ally ? "ally" : "enemy"},
                     {"x", u.x},
                     {"y", u.y},
                     {"health", u.health},
                     {"sieged", u.sieged},
                     {"action", u.action}});
  }
  j["units"] = std::move(units);
  json events = json::array();
  for (const auto& e : record.events) {
    events.push_back({{"kind", std::string(to_string(e.kind))},
                      {"source", e.source},
                      {"building", e.target_is_building},
                      {"target", e.target},
                      {"damage", e.damage}});
  }
  j["events"] = std::move(events);
  return j.dump();
}

ReplayRecord parse_json_line(const std::string& line) {
  const json j = json::parse(line);
  ReplayRecord rec;
  rec.tick = j.at("tick").get<int>();
  for (const auto& u : j.at("units")) {
    ReplayUnit ru;
    ru.id = u.at("id").get<std::size_t>();
    ru.team = u.at("team").get<std::string>() == "ally" ? Team::Ally : Team::Enemy;
    ru.x = u.at("x").get<double>();
    ru.y = u.at("y").get<double>();
    ru.health = u.at("health").get<double>();
    ru.sieged = u.at("sieged").get<bool>();
    ru.action = u.at("action").get<int>();
    rec.units.push_back(ru);
  }
  for (const auto& e : j.at("events")) {
    Event ev;
    ev.kind = parse_kind(e.at("kind").get<std::string>());
    ev.source = e.at("source").get<std::size_t>();
    ev.target_is_building = e.at("building").get<bool>();
    ev.target = e.at("target").get<std::size_t>();
    ev.damage = e.at("damage").get<double>();
    rec.events.push_back(ev);
  }
  return rec;
}

std::vector<ReplayRecord> read_replay(std::istream& in) {
  std::vector<ReplayRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_json_line(line));
  }
  return out;
}

}  // namespace hf::combat
