#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "hillfight/autodiff/checkpoint.hpp"
#include "hillfight/harness/heatmap.hpp"
#include "hillfight/harness/train.hpp"
#include "hillfight/scenario/scenario.hpp"

namespace hf::cli {
namespace {

namespace fs = std::filesystem;
using harness::RunConfig;

/// Raised for bad flag values that CLI11 cannot catch on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string winrate_text(const std::optional<double>& w) { return w ? std::to_string(*w) : std::string("n/a"); }

void print_row(std::ostream& out, const harness::MetricsRow& r) {
  out << "step " << r.step << "  episodes " << r.episodes << "  eval_winrate " << r.eval_winrate << '\n' << std::flush;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string algo;
  std::string scenario;
  std::string out_dir;
  std::vector<std::string> overrides;
};

RunConfig build_config(const TrainArgs& a) {
  RunConfig c = harness::load_config(a.config);
  if (a.seed) c.seed = *a.seed;
  if (!a.algo.empty()) {
    const auto algo = learners::parse_algorithm(a.algo);
    if (!algo) throw UsageError("unknown algorithm '" + a.algo + "'");
    c.algorithm = *algo;
  }
  if (!a.scenario.empty()) c.scenario = a.scenario;
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    harness::set_key(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!a.out_dir.empty()) c.output_dir = a.out_dir;
  return c;
}

void add_train_flags(CLI::App& cmd, TrainArgs& a) {
  cmd.add_option("--config", a.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  cmd.add_option("--seed", a.seed, "Override the run seed");
  cmd.add_option("--algo", a.algo, "Override the algorithm");
  cmd.add_option("--scenario", a.scenario, "Override the scenario (built-in name or .scn path)");
  cmd.add_option("--out", a.out_dir, "Override the output directory");
  cmd.add_option("--set", a.overrides, "Override any config key: key=value (repeatable)");
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix + p.extension().string());
}

void write_heatmap_pair(const harness::Heatmap& map, const fs::path& counts_path, std::ostream& out) {
  if (counts_path.has_parent_path()) fs::create_directories(counts_path.parent_path());
  std::ofstream counts(counts_path);
  harness::write_counts_csv(counts, map);
  const fs::path density_path = with_suffix(counts_path, "_density");
  std::ofstream density(density_path);
  harness::write_density_csv(density, map);
  out << "wrote " << counts_path.string() << " and " << density_path.string() << " (" << map.width << "x"
      << map.height << ", " << map.total() << " ally-ticks)\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hillfight: multi-agent micro-combat training harness"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a learner and write metrics and a checkpoint");
  add_train_flags(*train_cmd, train_args);

  std::string ckpt, eval_scenario, replay_dir;
  int episodes = 0;
  std::uint64_t eval_seed = 1;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt, "Checkpoint file (with its .cfg sidecar)")->required();
  eval_cmd->add_option("--scenario", eval_scenario, "Scenario name or .scn path")->required();
  eval_cmd->add_option("--episodes", episodes, "Number of episodes")->required();
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed");
  eval_cmd->add_option("--replays", replay_dir, "Write one JSON-lines replay per episode here");

  std::string logs, late_logs, heat_out, heat_scenario;
  auto* heat_cmd = app.add_subcommand("heatmap", "Ally occupancy heat-map from replay logs");
  heat_cmd->add_option("--logs", logs, "Directory of .jsonl replay logs")->required();
  heat_cmd->add_option("--out", heat_out, "Counts CSV; density goes to <stem>_density<ext>")->required();
  heat_cmd->add_option("--late", late_logs, "Second log set (late training); written as <stem>_late<ext>");
  heat_cmd->add_option("--scenario", heat_scenario, "Take the grid size from this scenario");

  auto* scen_cmd = app.add_subcommand("scenarios", "Inspect scenarios");
  scen_cmd->require_subcommand(1);
  auto* list_cmd = scen_cmd->add_subcommand("list", "List built-in scenarios");
  std::vector<std::string> validate_targets;
  auto* validate_cmd = scen_cmd->add_subcommand("validate", "Validate built-ins or the given scenario files");
  validate_cmd->add_option("targets", validate_targets, "Scenario names or .scn paths (default: all built-ins)");

  TrainArgs sweep_args;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  auto* sweep_cmd = app.add_subcommand("sweep", "One training run per value of a config key");
  add_train_flags(*sweep_cmd, sweep_args);
  sweep_cmd->add_option("--param", sweep_param, "Config key to vary, e.g. epsilon.anneal")->required();
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->required()->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) {
      const RunConfig config = build_config(train_args);
      const auto result = harness::train(config, [&](const harness::MetricsRow& r) { print_row(out, r); });
      out << "done: env_steps " << result.metrics.env_steps << "  episodes " << result.metrics.episodes
          << "  updates " << result.metrics.updates << "  final_winrate " << winrate_text(result.metrics.final_winrate)
          << "\ncheckpoint " << result.checkpoint.string() << '\n';
    } else if (*eval_cmd) {
      if (episodes <= 0) throw UsageError("--episodes must be positive");
      const auto result = harness::evaluate_checkpoint(ckpt, eval_scenario, episodes, eval_seed, !replay_dir.empty());
      if (!replay_dir.empty()) harness::write_replays(replay_dir, result.replays);
      out << "wins " << result.wins << "/" << result.episodes << "  win_rate " << result.win_rate << '\n';
    } else if (*heat_cmd) {
      const auto early = harness::load_replay_logs(logs);
      std::vector<harness::ReplayLog> late;
      if (!late_logs.empty()) late = harness::load_replay_logs(late_logs);
      int width = 0, height = 0;
      if (!heat_scenario.empty()) {
        const auto scn = scenario::load_scenario(heat_scenario);
        width = scn.width;
        height = scn.height;
      } else {
        std::vector<harness::ReplayLog> all = early;
        all.insert(all.end(), late.begin(), late.end());
        const auto bbox = harness::build_heatmap(all);
        width = bbox.width;
        height = bbox.height;
      }
      write_heatmap_pair(harness::build_heatmap(early, width, height), heat_out, out);
      if (!late_logs.empty()) {
        write_heatmap_pair(harness::build_heatmap(late, width, height), with_suffix(heat_out, "_late"), out);
      }
    } else if (*list_cmd) {
      for (const auto& name : scenario::builtin_names()) out << name << '\n';
    } else if (*validate_cmd) {
      if (validate_targets.empty()) validate_targets = scenario::builtin_names();
      bool all_ok = true;
      for (const auto& target : validate_targets) {
        try {
          const auto scn = scenario::load_scenario(target);
          out << "ok " << scn.name << '\n';
        } catch (const std::exception& e) {
          all_ok = false;
          out << "invalid " << target << ": " << e.what() << '\n';
        }
      }
      return all_ok ? kExitOk : kExitRuntime;
    } else if (*sweep_cmd) {
      const RunConfig base = build_config(sweep_args);
      // Reject unknown keys and malformed values before any run starts.
      for (const auto& v : sweep_values) {
        RunConfig probe = base;
        harness::set_key(probe, sweep_param, v);
      }
      out << "sweep " << sweep_param << ": " << sweep_values.size() << " runs\n";
      const auto results = harness::sweep(base, sweep_param, sweep_values);
      for (std::size_t i = 0; i < results.size(); ++i) {
        out << sweep_param << "=" << sweep_values[i] << "  final_winrate "
            << winrate_text(results[i].metrics.final_winrate) << "  " << results[i].checkpoint.parent_path().string()
            << '\n';
      }
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const harness::ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace hf::cli
