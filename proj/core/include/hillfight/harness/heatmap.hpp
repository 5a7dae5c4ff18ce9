#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hillfight/combat/replay.hpp"

namespace hf::harness {

/// Per-cell count of living-ally occupancy ticks, row-major with y as the row.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> counts;

  Heatmap() = default;
  Heatmap(int width, int height);

  std::int64_t& at(int x, int y) { return counts.at(static_cast<std::size_t>(y) * width + x); }
  std::int64_t at(int x, int y) const { return counts.at(static_cast<std::size_t>(y) * width + x); }
  std::int64_t total() const;
  /// counts / total; all zeros when the map is empty.
  std::vector<double> density() const;
};

using ReplayLog = std::vector<combat::ReplayRecord>;

/// Accumulates every tick of every log. Positions outside the grid are clamped to the border.
Heatmap build_heatmap(const std::vector<ReplayLog>& logs, int width, int height);
/// Grid just large enough for every recorded unit (1x1 when there are none).
Heatmap build_heatmap(const std::vector<ReplayLog>& logs);

/// Every *.jsonl under `dir`, recursively, in path order.
std::vector<ReplayLog> load_replay_logs(const std::filesystem::path& dir);

/// One CSV line per grid row, y = 0 first.
void write_counts_csv(std::ostream& out, const Heatmap& map);
void write_density_csv(std::ostream& out, const Heatmap& map);

}  // namespace hf::harness
