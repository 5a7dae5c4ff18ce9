#pragma once

#include <random>
#include <vector>

#include "hillfight/learners/learner.hpp"
#include "hillfight/replay/episode.hpp"

namespace hf::test {

/// Random episodes with legal actions drawn from random availability rows.
/// Lengths vary in [1, max_len]; roughly half end terminally.
inline std::vector<replay::EpisodeRecord> synthetic_episodes(const learners::EnvInfo& env, std::size_t count,
                                                             std::size_t max_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
  std::bernoulli_distribution coin(0.5);
  std::vector<replay::EpisodeRecord> out;
  for (std::size_t e = 0; e < count; ++e) {
    replay::EpisodeRecord ep(env.n_agents, env.obs_dim, env.state_dim, env.n_actions);
    const std::size_t len = len_dist(rng);
    const bool terminal = coin(rng);
    for (std::size_t t = 0; t <= len; ++t) {
      std::vector<std::vector<double>> obs(env.n_agents, std::vector<double>(env.obs_dim));
      std::vector<std::vector<std::uint8_t>> avail(env.n_agents, std::vector<std::uint8_t>(env.n_actions));
      for (auto& row : obs) {
        for (auto& v : row) v = u(rng);
      }
      for (auto& row : avail) {
        for (auto& a : row) a = coin(rng) ? 1 : 0;
        row[std::uniform_int_distribution<std::size_t>(0, env.n_actions - 1)(rng)] = 1;
      }
      std::vector<double> state(env.state_dim);
      for (auto& v : state) v = u(rng);
      ep.push_snapshot(obs, state, avail);
      if (t == len) break;
      std::vector<int> joint(env.n_agents);
      for (std::size_t i = 0; i < env.n_agents; ++i) {
        std::vector<double> w(avail[i].begin(), avail[i].end());
        joint[i] = static_cast<int>(std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng));
      }
      ep.push_transition(joint, u(rng), terminal && t + 1 == len);
    }
    out.push_back(std::move(ep));
  }
  return out;
}

inline replay::EpisodeBatch synthetic_batch(const learners::EnvInfo& env, std::size_t count, std::size_t max_len,
                                            std::uint64_t seed) {
  const auto episodes = synthetic_episodes(env, count, max_len, seed);
  std::vector<const replay::EpisodeRecord*> ptrs;
  for (const auto& e : episodes) ptrs.push_back(&e);
  return replay::pad_batch(ptrs);
}

/// Tiny network sizes so finite-difference checks stay fast.
inline learners::LearnerConfig tiny_config() {
  learners::LearnerConfig c;
  c.hidden = 4;
  c.mixer_embed = 3;
  c.critic_hidden = 4;
  c.n_quantiles = 4;
  c.quantile_embed = 4;
  return c;
}

}  // namespace hf::test
