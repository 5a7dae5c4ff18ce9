#include "hillfight/replay/episode.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hf::replay {

EpisodeRecord::EpisodeRecord(std::size_t n_agents_, std::size_t obs_dim_, std::size_t state_dim_,
                             std::size_t n_actions_)
    : n_agents(n_agents_), obs_dim(obs_dim_), state_dim(state_dim_), n_actions(n_actions_) {}

void EpisodeRecord::push_snapshot(const std::vector<std::vector<double>>& observations,
                                  const std::vector<double>& st,
                                  const std::vector<std::vector<std::uint8_t>>& available) {
  if (observations.size() != n_agents || available.size() != n_agents || st.size() != state_dim) {
    throw std::invalid_argument("episode snapshot has the wrong shape");
  }
  for (std::size_t i = 0; i < n_agents; ++i) {
    if (observations[i].size() != obs_dim || available[i].size() != n_actions) {
      throw std::invalid_argument("episode snapshot has the wrong shape");
    }
    obs.insert(obs.end(), observations[i].begin(), observations[i].end());
    avail.insert(avail.end(), available[i].begin(), available[i].end());
  }
  state.insert(state.end(), st.begin(), st.end());
}

void EpisodeRecord::push_transition(const std::vector<int>& joint_action, double reward, bool terminal_flag) {
  if (joint_action.size() != n_agents) throw std::invalid_argument("joint action has the wrong size");
  actions.insert(actions.end(), joint_action.begin(), joint_action.end());
  rewards.push_back(reward);
  terminal.push_back(terminal_flag ? 1 : 0);
  ++length;
}

bool EpisodeRecord::consistent() const {
  const std::size_t rows = length + 1;
  return obs.size() == rows * n_agents * obs_dim && state.size() == rows * state_dim &&
         avail.size() == rows * n_agents * n_actions && actions.size() == length * n_agents &&
         rewards.size() == length && terminal.size() == length;
}

double EpisodeRecord::episode_return() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

EpisodeBatch pad_batch(const std::vector<const EpisodeRecord*>& episodes) {
  EpisodeBatch b;
  if (episodes.empty()) return b;
  const EpisodeRecord& first = *episodes.front();
  b.batch = episodes.size();
  b.n_agents = first.n_agents;
  b.obs_dim = first.obs_dim;
  b.state_dim = first.state_dim;
  b.n_actions = first.n_actions;
  for (const auto* e : episodes) {
    if (e->n_agents != b.n_agents || e->obs_dim != b.obs_dim || e->state_dim != b.state_dim ||
        e->n_actions != b.n_actions || !e->consistent()) {
      throw std::invalid_argument("cannot batch episodes of different shapes");
    }
    b.max_length = std::max(b.max_length, e->length);
  }
  const std::size_t L = b.max_length, N = b.n_agents, B = b.batch;
  b.obs.assign(B * (L + 1) * N * b.obs_dim, 0.0);
  b.state.assign(B * (L + 1) * b.state_dim, 0.0);
  b.avail.assign(B * (L + 1) * N * b.n_actions, 0);
  b.actions.assign(B * L * N, 0);
  b.rewards.assign(B * L, 0.0);
  b.terminal.assign(B * L, 0);
  b.filled.assign(B * L, 0);
  b.lengths.resize(B);
  for (std::size_t i = 0; i < B; ++i) {
    const EpisodeRecord& e = *episodes[i];
    b.lengths[i] = e.length;
    std::copy(e.obs.begin(), e.obs.end(), b.obs.begin() + i * (L + 1) * N * b.obs_dim);
    std::copy(e.state.begin(), e.state.end(), b.state.begin() + i * (L + 1) * b.state_dim);
    std::copy(e.avail.begin(), e.avail.end(), b.avail.begin() + i * (L + 1) * N * b.n_actions);
    std::copy(e.actions.begin(), e.actions.end(), b.actions.begin() + i * L * N);
    std::copy(e.rewards.begin(), e.rewards.end(), b.rewards.begin() + i * L);
    std::copy(e.terminal.begin(), e.terminal.end(), b.terminal.begin() + i * L);
    std::fill_n(b.filled.begin() + i * L, e.length, 1);
  }
  return b;
}

EpisodeRecord unpad(const EpisodeBatch& b, std::size_t i) {
  EpisodeRecord e(b.n_agents, b.obs_dim, b.state_dim, b.n_actions);
  const std::size_t L = b.max_length, N = b.n_agents, T = b.lengths.at(i);
  e.length = T;
  auto copy = [](const auto& src, std::size_t from, std::size_t count, auto& dst) {
    dst.assign(src.begin() + from, src.begin() + from + count);
  };
  copy(b.obs, i * (L + 1) * N * b.obs_dim, (T + 1) * N * b.obs_dim, e.obs);
  copy(b.state, i * (L + 1) * b.state_dim, (T + 1) * b.state_dim, e.state);
  copy(b.avail, i * (L + 1) * N * b.n_actions, (T + 1) * N * b.n_actions, e.avail);
  copy(b.actions, i * L * N, T * N, e.actions);
  copy(b.rewards, i * L, T, e.rewards);
  copy(b.terminal, i * L, T, e.terminal);
  return e;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : ring_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(EpisodeRecord episode) {
  const std::size_t slot = (head_ + size_) % ring_.size();
  ring_[slot] = std::move(episode);
  if (size_ < ring_.size()) {
    ++size_;
  } else {
    head_ = (head_ + 1) % ring_.size();
  }
  ++inserted_;
}

const EpisodeRecord& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay index out of range");
  return ring_[(head_ + i) % ring_.size()];
}

std::optional<std::vector<std::size_t>> ReplayBuffer::sample_indices(std::size_t batch, std::mt19937_64& rng) const {
  if (!can_sample(batch)) return std::nullopt;
  // Partial Fisher-Yates over retained positions.
  std::vector<std::size_t> pool(size_);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, size_ - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(batch);
  return pool;
}

std::optional<EpisodeBatch> ReplayBuffer::sample(std::size_t batch, std::mt19937_64& rng) const {
  const auto idx = sample_indices(batch, rng);
  if (!idx) return std::nullopt;
  std::vector<const EpisodeRecord*> eps;
  eps.reserve(batch);
  for (std::size_t i : *idx) eps.push_back(&at(i));
  return pad_batch(eps);
}

}  // namespace hf::replay
