#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace hf::replay {

/// One finished episode of length T. Per-tick arrays hold T + 1 rows for
/// observations, state and availability (the final row is the post-episode
/// snapshot used for bootstrapping) and T rows for actions and rewards.
struct EpisodeRecord {
  std::size_t n_agents = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::size_t n_actions = 0;
  std::size_t length = 0;

  std::vector<double> obs;           // [(T+1) * n_agents * obs_dim]
  std::vector<double> state;         // [(T+1) * state_dim]
  std::vector<std::uint8_t> avail;   // [(T+1) * n_agents * n_actions]
  std::vector<int> actions;          // [T * n_agents]
  std::vector<double> rewards;       // [T]
  std::vector<std::uint8_t> terminal;  // [T]; 1 only when the episode ended by win or loss

  EpisodeRecord() = default;
  EpisodeRecord(std::size_t n_agents, std::size_t obs_dim, std::size_t state_dim, std::size_t n_actions);

  /// Appends tick t's pre-step snapshot. Call once per tick and once more after the last step.
  void push_snapshot(const std::vector<std::vector<double>>& observations, const std::vector<double>& state,
                     const std::vector<std::vector<std::uint8_t>>& available);
  void push_transition(const std::vector<int>& joint_action, double reward, bool terminal_flag);

  /// Structural invariants: row counts match `length`.
  bool consistent() const;
  double episode_return() const;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

/// Episodes stacked and zero-padded to the longest one. `filled` is 1 for
/// real transitions and 0 for padding.
struct EpisodeBatch {
  std::size_t batch = 0;
  std::size_t max_length = 0;
  std::size_t n_agents = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::size_t n_actions = 0;

  std::vector<double> obs;             // [B][L+1][N][obs_dim]
  std::vector<double> state;           // [B][L+1][state_dim]
  std::vector<std::uint8_t> avail;     // [B][L+1][N][n_actions]
  std::vector<int> actions;            // [B][L][N]
  std::vector<double> rewards;         // [B][L]
  std::vector<std::uint8_t> terminal;  // [B][L]
  std::vector<std::uint8_t> filled;    // [B][L]
  std::vector<std::size_t> lengths;    // [B]

  const double* obs_at(std::size_t b, std::size_t t, std::size_t agent) const {
    return obs.data() + ((b * (max_length + 1) + t) * n_agents + agent) * obs_dim;
  }
  const double* state_at(std::size_t b, std::size_t t) const {
    return state.data() + (b * (max_length + 1) + t) * state_dim;
  }
  const std::uint8_t* avail_at(std::size_t b, std::size_t t, std::size_t agent) const {
    return avail.data() + ((b * (max_length + 1) + t) * n_agents + agent) * n_actions;
  }
  int action_at(std::size_t b, std::size_t t, std::size_t agent) const {
    return actions[(b * max_length + t) * n_agents + agent];
  }
  double reward_at(std::size_t b, std::size_t t) const { return rewards[b * max_length + t]; }
  bool terminal_at(std::size_t b, std::size_t t) const { return terminal[b * max_length + t] != 0; }
  bool filled_at(std::size_t b, std::size_t t) const { return filled[b * max_length + t] != 0; }
};

/// Stacks episodes of identical dimensions. Throws std::invalid_argument otherwise.
EpisodeBatch pad_batch(const std::vector<const EpisodeRecord*>& episodes);
/// Inverse of pad_batch for row b.
EpisodeRecord unpad(const EpisodeBatch& batch, std::size_t b);

/// FIFO ring of the most recent `capacity` episodes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 5000);

  void push(EpisodeRecord episode);
  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return ring_.size(); }
  std::uint64_t inserted() const noexcept { return inserted_; }
  bool can_sample(std::size_t batch) const noexcept { return batch > 0 && size_ >= batch; }

  /// Index i = 0 is the oldest retained episode.
  const EpisodeRecord& at(std::size_t i) const;

  /// Distinct slots drawn uniformly; nullopt while the buffer holds fewer than `batch` episodes.
  std::optional<std::vector<std::size_t>> sample_indices(std::size_t batch, std::mt19937_64& rng) const;
  std::optional<EpisodeBatch> sample(std::size_t batch, std::mt19937_64& rng) const;

 private:
  std::vector<EpisodeRecord> ring_;
  std::size_t head_ = 0;  // slot of the oldest episode
  std::size_t size_ = 0;
  std::uint64_t inserted_ = 0;
};

}  // namespace hf::replay
