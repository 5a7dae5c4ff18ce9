#include "hillfight/harness/heatmap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace hf::harness {

Heatmap::Heatmap(int w, int h) : width(w), height(h), counts(static_cast<std::size_t>(w) * h, 0) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("heat-map extents must be positive");
}

std::int64_t Heatmap::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

std::vector<double> Heatmap::density() const {
  const auto sum = total();
  std::vector<double> d(counts.size(), 0.0);
  if (sum == 0) return d;
  for (std::size_t i = 0; i < counts.size(); ++i) d[i] = static_cast<double>(counts[i]) / static_cast<double>(sum);
  return d;
}

Heatmap build_heatmap(const std::vector<ReplayLog>& logs, int width, int height) {
  Heatmap map(width, height);
  for (const auto& log : logs) {
    for (const auto& rec : log) {
      for (const auto& u : rec.units) {
        if (u.team != combat::Team::Ally || u.health <= 0.0) continue;
        const int x = std::clamp(static_cast<int>(std::floor(u.x)), 0, width - 1);
        const int y = std::clamp(static_cast<int>(std::floor(u.y)), 0, height - 1);
        ++map.at(x, y);
      }
    }
  }
  return map;
}

Heatmap build_heatmap(const std::vector<ReplayLog>& logs) {
  int width = 1, height = 1;
  for (const auto& log : logs) {
    for (const auto& rec : log) {
      for (const auto& u : rec.units) {
        width = std::max(width, static_cast<int>(std::floor(u.x)) + 1);
        height = std::max(height, static_cast<int>(std::floor(u.y)) + 1);
      }
    }
  }
  return build_heatmap(logs, width, height);
}

std::vector<ReplayLog> load_replay_logs(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::exists(dir)) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ReplayLog> logs;
  for (const auto& f : files) {
    std::ifstream in(f);
    logs.push_back(combat::read_replay(in));
  }
  return logs;
}

namespace {

template <typename T, typename Fmt>
void write_grid(std::ostream& out, const Heatmap& map, const std::vector<T>& cells, Fmt fmt) {
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (x) out << ',';
      out << fmt(cells[static_cast<std::size_t>(y) * map.width + x]);
    }
    out << '\n';
  }
}

}  // namespace

void write_counts_csv(std::ostream& out, const Heatmap& map) {
  write_grid(out, map, map.counts, [](std::int64_t v) { return std::to_string(v); });
}

void write_density_csv(std::ostream& out, const Heatmap& map) {
  write_grid(out, map, map.density(), [](double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  });
}

}  // namespace hf::harness
