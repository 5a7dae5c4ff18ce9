#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "hillfight/scenario/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = hf::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hillfight_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path tiny_config(const fs::path& dir, std::int64_t steps) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << "scenario = smoke_3v2\nalgorithm = vdn\ntrain.total_steps = " << steps
                   << "\ntrain.batch_size = 4\ntrain.buffer_size = 16\neval.interval = 200\neval.episodes = 2\n"
                      "network.hidden = 8\nnetwork.mixer_embed = 4\noutput.dir = "
                   << (dir / "run").string() << "\n";
  return p;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("scenarios list prints the eight built-ins plus the smoke map") {
  const auto r = run({"scenarios", "list"});
  CHECK(r.code == 0);
  CHECK(count_lines(r.out) == 9);
  CHECK(r.out.find("smoke_3v2\n") != std::string::npos);
  CHECK(r.out.find("off_distant\n") != std::string::npos);
  CHECK(run({"scenarios", "validate"}).code == 0);
  CHECK(run({"scenarios", "validate", "/nonexistent/map.scn"}).code == 2);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"train"}).code == 1);
  CHECK(run({"train", "--bogus"}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"eval", "--ckpt", "x"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("train, eval and heatmap from the command line") {
  const fs::path dir = scratch("flow");
  const fs::path cfg = tiny_config(dir, 400);
  const auto t = run({"train", "--config", cfg.string(), "--seed", "3"});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("final_winrate") != std::string::npos);
  const fs::path ckpt = dir / "run" / "checkpoint.bin";
  CHECK(fs::exists(dir / "run" / "metrics.csv"));
  REQUIRE(fs::exists(ckpt));

  CHECK(run({"train", "--config", cfg.string(), "--set", "no.such.key=1"}).code == 2);
  CHECK(run({"train", "--config", cfg.string(), "--algo", "dqn"}).code == 1);
  CHECK(run({"train", "--config", cfg.string(), "--set", "oops"}).code == 1);

  const auto e = run({"eval", "--ckpt", ckpt.string(), "--scenario", "smoke_3v2", "--episodes", "3", "--replays",
                      (dir / "replays").string()});
  CHECK(e.code == 0);
  CHECK(e.out.find("/3") != std::string::npos);
  CHECK(fs::exists(dir / "replays" / "episode_2.jsonl"));
  CHECK(run({"eval", "--ckpt", ckpt.string(), "--scenario", "smoke_3v2", "--episodes", "0"}).code == 1);
  CHECK(run({"eval", "--ckpt", ckpt.string(), "--scenario", "def_infantry", "--episodes", "1"}).code == 2);
  CHECK(run({"eval", "--ckpt", (dir / "missing.bin").string(), "--scenario", "smoke_3v2", "--episodes", "1"}).code == 2);

  const auto h = run({"heatmap", "--logs", (dir / "replays").string(), "--out", (dir / "heat.csv").string(), "--late",
                      (dir / "replays").string(), "--scenario", "smoke_3v2"});
  CHECK(h.code == 0);
  for (const char* f : {"heat.csv", "heat_density.csv", "heat_late.csv", "heat_late_density.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / f));
  }
  std::ifstream heat(dir / "heat.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(heat, line)) ++rows;
  CHECK(rows == 16);
}

TEST_CASE("sweep launches one run per value") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = tiny_config(dir, 0);
  const auto r = run({"sweep", "--config", cfg.string(), "--param", "epsilon.anneal", "--values",
                      "10000,50000,100000,500000,5000000"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("5 runs") != std::string::npos);
  for (const char* v : {"10000", "50000", "100000", "500000", "5000000"}) {
    CAPTURE(v);
    CHECK(fs::exists(dir / "run" / (std::string("epsilon.anneal=") + v) / "checkpoint.bin"));
  }
  CHECK(run({"sweep", "--config", cfg.string(), "--param", "epsilon.bogus", "--values", "1"}).code == 2);
  CHECK(run({"sweep", "--config", cfg.string(), "--param", "epsilon.anneal", "--values", "soon"}).code == 2);
}
