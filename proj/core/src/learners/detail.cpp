#include "detail.hpp"

#include <algorithm>
#include <limits>

#include "hillfight/learners/agent_net.hpp"

namespace hf::learners::detail {

ad::Tensor inputs_at(const EpisodeBatch& batch, std::size_t t, std::span<const double> extra, std::size_t extra_dim) {
  const std::size_t n = batch.n_agents, u = batch.n_actions;
  const std::size_t width = agent_input_size(batch.obs_dim, u, n, extra_dim);
  ad::Tensor x = ad::Tensor::matrix(batch.batch * n, width);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const std::span<const double> ex =
        extra_dim > 0 ? extra.subspan(b * extra_dim, extra_dim) : std::span<const double>{};
    for (std::size_t i = 0; i < n; ++i) {
      const int last = t > 0 ? batch.action_at(b, t - 1, i) : -1;
      const auto row = agent_input({batch.obs_at(b, t, i), batch.obs_dim}, last, u, i, n, ex);
      std::copy(row.begin(), row.end(), x.data() + (b * n + i) * width);
    }
  }
  return x;
}

std::vector<std::size_t> actions_at(const EpisodeBatch& batch, std::size_t t) {
  std::vector<std::size_t> out(batch.batch * batch.n_agents, 0);
  if (t >= batch.max_length) return out;
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t i = 0; i < batch.n_agents; ++i) {
      out[b * batch.n_agents + i] = static_cast<std::size_t>(std::max(0, batch.action_at(b, t, i)));
    }
  }
  return out;
}

std::vector<double> policy_mask_at(const EpisodeBatch& batch, std::size_t t) {
  const std::size_t u = batch.n_actions;
  std::vector<double> mask(batch.batch * batch.n_agents * u, 0.0);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t i = 0; i < batch.n_agents; ++i) {
      const std::uint8_t* avail = batch.avail_at(b, t, i);
      double* row = mask.data() + (b * batch.n_agents + i) * u;
      bool any = false;
      for (std::size_t a = 0; a < u; ++a) {
        row[a] = avail[a] ? 1.0 : 0.0;
        any = any || avail[a];
      }
      if (!any) std::fill(row, row + u, 1.0);
    }
  }
  return mask;
}

ad::Tensor states_range(const EpisodeBatch& batch, std::size_t t0, std::size_t t1) {
  const std::size_t s = batch.state_dim;
  ad::Tensor out = ad::Tensor::matrix((t1 - t0) * batch.batch, s);
  for (std::size_t t = t0; t < t1; ++t) {
    for (std::size_t b = 0; b < batch.batch; ++b) {
      std::copy_n(batch.state_at(b, t), s, out.data() + ((t - t0) * batch.batch + b) * s);
    }
  }
  return out;
}

Transitions transitions(const EpisodeBatch& batch) {
  Transitions tr;
  const std::size_t rows = batch.max_length * batch.batch;
  tr.reward.resize(rows);
  tr.terminal.resize(rows);
  tr.filled.resize(rows);
  for (std::size_t t = 0; t < batch.max_length; ++t) {
    for (std::size_t b = 0; b < batch.batch; ++b) {
      const std::size_t m = t * batch.batch + b;
      tr.reward[m] = batch.reward_at(b, t);
      tr.terminal[m] = batch.terminal_at(b, t) ? 1.0 : 0.0;
      tr.filled[m] = batch.filled_at(b, t) ? 1.0 : 0.0;
    }
  }
  return tr;
}

namespace {

template <typename Better>
void masked_extreme(const ad::Tensor& q, const EpisodeBatch& batch, std::size_t t, Better better,
                    std::vector<double>* values, std::vector<std::size_t>* indices) {
  const std::size_t rows = batch.batch * batch.n_agents, u = batch.n_actions;
  if (values) values->assign(rows, 0.0);
  if (indices) indices->assign(rows, 0);
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t i = 0; i < batch.n_agents; ++i) {
      const std::size_t r = b * batch.n_agents + i;
      const std::uint8_t* avail = batch.avail_at(b, t, i);
      std::size_t best = u;
      for (std::size_t a = 0; a < u; ++a) {
        if (!avail[a]) continue;
        if (best == u || better(q[r * u + a], q[r * u + best])) best = a;
      }
      if (best == u) continue;
      if (values) (*values)[r] = q[r * u + best];
      if (indices) (*indices)[r] = best;
    }
  }
}

}  // namespace

std::vector<double> masked_max_rows(const ad::Tensor& q, const EpisodeBatch& batch, std::size_t t) {
  std::vector<double> out;
  masked_extreme(q, batch, t, [](double a, double b) { return a > b; }, &out, nullptr);
  return out;
}

std::vector<double> masked_min_rows(const ad::Tensor& q, const EpisodeBatch& batch, std::size_t t) {
  std::vector<double> out;
  masked_extreme(q, batch, t, [](double a, double b) { return a < b; }, &out, nullptr);
  return out;
}

std::vector<std::size_t> masked_argmax_rows(const ad::Tensor& q, const EpisodeBatch& batch, std::size_t t) {
  std::vector<std::size_t> out;
  masked_extreme(q, batch, t, [](double a, double b) { return a > b; }, nullptr, &out);
  return out;
}

ad::Tensor joint_onehot(std::span<const std::size_t> actions, std::size_t n_agents, std::size_t n_actions) {
  const std::size_t rows = actions.size() / n_agents;
  ad::Tensor out = ad::Tensor::matrix(rows, n_agents * n_actions);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < n_agents; ++i) out.at(r, i * n_actions + actions[r * n_agents + i]) = 1.0;
  }
  return out;
}

std::vector<double> repeat_each(std::span<const double> v, std::size_t k) {
  std::vector<double> out;
  out.reserve(v.size() * k);
  for (double x : v) out.insert(out.end(), k, x);
  return out;
}

std::vector<std::size_t> agent_major_to_fraction_major(std::size_t batch, std::size_t n_agents, std::size_t k) {
  std::vector<std::size_t> index;
  index.reserve(batch * n_agents * k);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < n_agents; ++i) index.push_back((b * n_agents + i) * k + j);
    }
  }
  return index;
}

ad::Tensor quantile_means(const ad::Tensor& z, std::size_t k) {
  const std::size_t rows = z.rows() / k, u = z.cols();
  ad::Tensor out = ad::Tensor::matrix(rows, u);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t a = 0; a < u; ++a) out.at(r, a) += z.at(r * k + j, a);
    }
  }
  for (auto& v : out.storage()) v /= static_cast<double>(k);
  return out;
}

}  // namespace hf::learners::detail
