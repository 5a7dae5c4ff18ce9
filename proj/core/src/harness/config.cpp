#include "hillfight/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hf::harness {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("config key '" + std::string(key) + "': cannot read '" + std::string(value) + "' as " +
                    std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true/false");
}

std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

learners::RiskInterval parse_interval(std::string_view key, std::string_view value) {
  if (auto named = learners::parse_risk(value)) return *named;
  const auto colon = value.find(':');
  if (colon == std::string_view::npos) bad_value(key, value, "a risk name or lower:upper");
  learners::RiskInterval r{parse_number<double>(key, trim(value.substr(0, colon))),
                           parse_number<double>(key, trim(value.substr(colon + 1)))};
  if (!(r.lower >= 0.0 && r.upper <= 1.0 && r.lower < r.upper)) bad_value(key, value, "an interval inside [0, 1]");
  return r;
}

std::string fmt_interval(learners::RiskInterval r) {
  const auto name = learners::risk_name(r);
  return name != "custom" ? std::string(name) : fmt_double(r.lower) + ":" + fmt_double(r.upper);
}

std::vector<std::pair<std::int64_t, double>> parse_knots(std::string_view key, std::string_view value) {
  std::vector<std::pair<std::int64_t, double>> knots;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const std::string_view item = trim(value.substr(0, comma));
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) bad_value(key, item, "step:value");
    knots.emplace_back(parse_number<std::int64_t>(key, trim(item.substr(0, colon))),
                       parse_number<double>(key, trim(item.substr(colon + 1))));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return knots;
}

std::string fmt_knots(const std::vector<std::pair<std::int64_t, double>>& knots) {
  std::string out;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(knots[i].first) + ":" + fmt_double(knots[i].second);
  }
  return out;
}

struct Entry {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Entry number(T RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = parse_number<T>(k, v); },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*field);
            else return std::to_string(c.*field);
          }};
}

template <typename Sub, typename T>
Entry nested_number(Sub RunConfig::*sub, T Sub::*field) {
  return {[sub, field](RunConfig& c, std::string_view k, std::string_view v) { c.*sub.*field = parse_number<T>(k, v); },
          [sub, field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*sub.*field);
            else return std::to_string(c.*sub.*field);
          }};
}

template <typename Sub>
Entry nested_bool(Sub RunConfig::*sub, bool Sub::*field) {
  return {[sub, field](RunConfig& c, std::string_view k, std::string_view v) { c.*sub.*field = parse_bool(k, v); },
          [sub, field](const RunConfig& c) { return fmt_bool(c.*sub.*field); }};
}

template <typename E>
Entry choice(std::function<E&(RunConfig&)> ref, std::vector<std::pair<E, std::string>> names) {
  return {[ref, names](RunConfig& c, std::string_view k, std::string_view v) {
            for (const auto& [e, n] : names) {
              if (n == v) {
                ref(c) = e;
                return;
              }
            }
            std::string options;
            for (const auto& entry : names) options += (options.empty() ? "" : "|") + entry.second;
            bad_value(k, v, options);
          },
          [ref, names](const RunConfig& c) {
            const E e = ref(const_cast<RunConfig&>(c));
            for (const auto& [value, n] : names) {
              if (value == e) return n;
            }
            return std::string("?");
          }};
}

const std::vector<std::pair<std::string, Entry>>& table() {
  using R = RunConfig;
  using L = learners::LearnerConfig;
  using W = reward::RewardConfig;
  static const std::vector<std::pair<std::string, Entry>> entries = [] {
    std::vector<std::pair<std::string, Entry>> t;
    t.emplace_back("scenario", Entry{[](R& c, std::string_view, std::string_view v) { c.scenario = std::string(v); },
                                     [](const R& c) { return c.scenario; }});
    t.emplace_back("algorithm", Entry{[](R& c, std::string_view k, std::string_view v) {
                                        auto a = learners::parse_algorithm(v);
                                        if (!a) bad_value(k, v, "iql|vdn|qmix|qtran|diql|ddn|dmix|drima|coma|masac|maddpg");
                                        c.algorithm = *a;
                                      },
                                      [](const R& c) { return std::string(learners::to_string(c.algorithm)); }});
    t.emplace_back("seed", number(&R::seed));

    t.emplace_back("train.total_steps", number(&R::total_steps));
    t.emplace_back("train.mode", choice<replay::BufferMode>([](R& c) -> replay::BufferMode& { return c.mode; },
                                                            {{replay::BufferMode::Episodic, "episodic"},
                                                             {replay::BufferMode::Parallel, "parallel"}}));
    t.emplace_back("train.batch_size_run", number(&R::runners));
    t.emplace_back("train.update_interval", number(&R::update_interval));
    t.emplace_back("train.target_update", number(&R::target_update));
    t.emplace_back("train.buffer_size", number(&R::buffer_size));
    t.emplace_back("train.batch_size", number(&R::batch_size));
    t.emplace_back("train.gamma", nested_number(&R::learner, &L::gamma));
    t.emplace_back("train.lr", Entry{[](R& c, std::string_view k, std::string_view v) {
                                       c.learner.optimizer.lr = parse_number<double>(k, v);
                                     },
                                     [](const R& c) { return fmt_double(c.learner.optimizer.lr); }});
    t.emplace_back("optim.decay", Entry{[](R& c, std::string_view k, std::string_view v) {
                                          c.learner.optimizer.decay = parse_number<double>(k, v);
                                        },
                                        [](const R& c) { return fmt_double(c.learner.optimizer.decay); }});
    t.emplace_back("optim.eps", Entry{[](R& c, std::string_view k, std::string_view v) {
                                        c.learner.optimizer.eps = parse_number<double>(k, v);
                                      },
                                      [](const R& c) { return fmt_double(c.learner.optimizer.eps); }});
    t.emplace_back("optim.grad_clip", Entry{[](R& c, std::string_view k, std::string_view v) {
                                              c.learner.optimizer.grad_clip = parse_number<double>(k, v);
                                            },
                                            [](const R& c) { return fmt_double(c.learner.optimizer.grad_clip); }});

    t.emplace_back("epsilon.kind",
                   choice<replay::EpsilonKind>([](R& c) -> replay::EpsilonKind& { return c.epsilon.kind; },
                                               {{replay::EpsilonKind::Linear, "linear"},
                                                {replay::EpsilonKind::Exponential, "exponential"},
                                                {replay::EpsilonKind::Piecewise, "piecewise"}}));
    t.emplace_back("epsilon.start", nested_number(&R::epsilon, &replay::EpsilonSchedule::start));
    t.emplace_back("epsilon.end", nested_number(&R::epsilon, &replay::EpsilonSchedule::end));
    t.emplace_back("epsilon.anneal", nested_number(&R::epsilon, &replay::EpsilonSchedule::anneal_steps));
    t.emplace_back("epsilon.knots", Entry{[](R& c, std::string_view k, std::string_view v) {
                                            c.epsilon.knots = parse_knots(k, v);
                                          },
                                          [](const R& c) { return fmt_knots(c.epsilon.knots); }});
    t.emplace_back("epsilon.index", choice<EpsilonIndex>([](R& c) -> EpsilonIndex& { return c.epsilon_index; },
                                                         {{EpsilonIndex::EnvSteps, "env_steps"},
                                                          {EpsilonIndex::Updates, "updates"}}));

    t.emplace_back("network.hidden", nested_number(&R::learner, &L::hidden));
    t.emplace_back("network.mixer_embed", nested_number(&R::learner, &L::mixer_embed));
    t.emplace_back("network.critic_hidden", nested_number(&R::learner, &L::critic_hidden));
    t.emplace_back("network.n_quantiles", nested_number(&R::learner, &L::n_quantiles));
    t.emplace_back("network.quantile_embed", nested_number(&R::learner, &L::quantile_embed));

    t.emplace_back("risk.sampling", Entry{[](R& c, std::string_view k, std::string_view v) {
                                            c.learner.sampling = parse_interval(k, v);
                                          },
                                          [](const R& c) { return fmt_interval(c.learner.sampling); }});
    t.emplace_back("risk.agent", Entry{[](R& c, std::string_view k, std::string_view v) {
                                         c.learner.risk.agent = parse_interval(k, v);
                                       },
                                       [](const R& c) { return fmt_interval(c.learner.risk.agent); }});
    t.emplace_back("risk.env", Entry{[](R& c, std::string_view k, std::string_view v) {
                                       c.learner.risk.env = parse_interval(k, v);
                                     },
                                     [](const R& c) { return fmt_interval(c.learner.risk.env); }});
    t.emplace_back("qtran.opt_weight", nested_number(&R::learner, &L::qtran_opt_weight));
    t.emplace_back("qtran.nopt_weight", nested_number(&R::learner, &L::qtran_nopt_weight));
    t.emplace_back("masac.alpha", nested_number(&R::learner, &L::entropy_alpha));
    t.emplace_back("maddpg.temperature", nested_number(&R::learner, &L::gumbel_temperature));

    t.emplace_back("obs.communicate", nested_bool(&R::perception, &perception::PerceptionConfig::communicate));
    t.emplace_back("obs.broadcast", nested_bool(&R::perception, &perception::PerceptionConfig::broadcast));
    t.emplace_back("obs.comm_mode",
                   choice<perception::CommMode>([](R& c) -> perception::CommMode& { return c.perception.comm_mode; },
                                                {{perception::CommMode::Closure, "closure"},
                                                 {perception::CommMode::SinglePass, "single_pass"}}));
    t.emplace_back("obs.state_mode",
                   choice<perception::StateMode>([](R& c) -> perception::StateMode& { return c.perception.state_mode; },
                                                 {{perception::StateMode::Concat, "concat"},
                                                  {perception::StateMode::Smac, "smac"}}));

    t.emplace_back("reward.damage_weight", nested_number(&R::reward, &W::damage_weight));
    t.emplace_back("reward.kill_bonus", nested_number(&R::reward, &W::kill_bonus));
    t.emplace_back("reward.win_bonus", nested_number(&R::reward, &W::win_bonus));
    t.emplace_back("reward.normalize", nested_bool(&R::reward, &W::normalize));
    t.emplace_back("reward.return_cap", nested_number(&R::reward, &W::return_cap));
    t.emplace_back("reward.positive_only", nested_bool(&R::reward, &W::positive_only));
    t.emplace_back("reward.loss_weight", nested_number(&R::reward, &W::loss_weight));
    t.emplace_back("reward.schedule",
                   choice<reward::AltSchedule>([](R& c) -> reward::AltSchedule& { return c.reward.schedule; },
                                               {{reward::AltSchedule::None, "none"},
                                                {reward::AltSchedule::Switch, "switch"},
                                                {reward::AltSchedule::Blend, "blend"}}));
    t.emplace_back("reward.switch_at", nested_number(&R::reward, &W::switch_at));
    t.emplace_back("reward.alt_weight", nested_number(&R::reward, &W::alt_weight));
    t.emplace_back("reward.base_weight", nested_number(&R::reward, &W::base_weight));

    t.emplace_back("eval.interval", number(&R::eval_interval));
    t.emplace_back("eval.episodes", number(&R::eval_episodes));

    t.emplace_back("output.dir", Entry{[](R& c, std::string_view, std::string_view v) { c.output_dir = std::string(v); },
                                       [](const R& c) { return c.output_dir; }});
    t.emplace_back("output.replays", Entry{[](R& c, std::string_view k, std::string_view v) {
                                             c.save_replays = parse_bool(k, v);
                                           },
                                           [](const R& c) { return fmt_bool(c.save_replays); }});
    return t;
  }();
  return entries;
}

const Entry& find(std::string_view key) {
  for (const auto& [name, entry] : table()) {
    if (name == key) return entry;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

int RunConfig::resolved_runners() const {
  return runners > 0 ? runners : replay::default_runners(mode);
}

int RunConfig::resolved_update_interval() const {
  return update_interval > 0 ? update_interval : replay::update_cadence(mode).behavior_interval;
}

int RunConfig::resolved_eval_episodes() const {
  return eval_episodes > 0 ? eval_episodes : (mode == replay::BufferMode::Episodic ? 32 : 20);
}

void set_key(RunConfig& config, std::string_view key, std::string_view value) { find(key).set(config, key, trim(value)); }

std::string get_key(const RunConfig& config, std::string_view key) { return find(key).get(config); }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& entry : table()) k.push_back(entry.first);
    return k;
  }();
  return keys;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (const auto it = seen.find(key); it != seen.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' already set on line " +
                        std::to_string(it->second));
    }
    seen.emplace(key, line_no);
    try {
      set_key(base, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_text(const RunConfig& config) {
  std::string out;
  for (const auto& [name, entry] : table()) out += name + " = " + entry.get(config) + "\n";
  return out;
}

std::vector<std::string> check(const RunConfig& c) {
  std::vector<std::string> problems;
  if (c.total_steps < 0) problems.push_back("train.total_steps must be >= 0");
  if (c.batch_size == 0) problems.push_back("train.batch_size must be positive");
  if (c.buffer_size < c.batch_size) problems.push_back("train.buffer_size must be at least train.batch_size");
  if (c.target_update <= 0) problems.push_back("train.target_update must be positive");
  if (c.runners < 0 || c.update_interval < 0 || c.eval_episodes < 0) problems.push_back("counts must be >= 0");
  if (c.eval_interval <= 0) problems.push_back("eval.interval must be positive");
  if (!(c.learner.gamma >= 0.0 && c.learner.gamma < 1.0)) problems.push_back("train.gamma must lie in [0, 1)");
  if (c.learner.optimizer.lr <= 0.0) problems.push_back("train.lr must be positive");
  if (c.learner.hidden == 0 || c.learner.mixer_embed == 0 || c.learner.critic_hidden == 0 ||
      c.learner.n_quantiles == 0 || c.learner.quantile_embed == 0) {
    problems.push_back("network sizes must be positive");
  }
  if (c.learner.entropy_alpha < 0.0) problems.push_back("masac.alpha must be >= 0");
  if (c.learner.gumbel_temperature <= 0.0) problems.push_back("maddpg.temperature must be positive");
  for (const char* p : c.epsilon.problems()) problems.push_back(std::string("epsilon: ") + p);
  if (c.reward.positive_only && (c.reward.damage_weight < 0 || c.reward.kill_bonus < 0 || c.reward.win_bonus < 0)) {
    problems.push_back("reward weights must be >= 0 when reward.positive_only");
  }
  return problems;
}

}  // namespace hf::harness
