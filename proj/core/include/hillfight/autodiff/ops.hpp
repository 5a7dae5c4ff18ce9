#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hillfight/autodiff/tape.hpp"

// Differentiable operations on rank-2 tensors. Every op records itself on
// the tape of its first operand. Shapes are checked eagerly and mismatches
// raise DimensionError.

namespace hf::ad {

Var matmul(Var a, Var b);
/// a[m, n] + bias[n] broadcast across rows.
Var add_bias(Var a, Var bias);
/// x·w + b.
Var dense_forward(Var x, Var w, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// a[m, n] + c[m, 1] broadcast across columns.
Var add_col(Var a, Var col);
/// a[m, n] * c[m, 1] broadcast across columns.
Var mul_col(Var a, Var col);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var elu(Var a);
Var abs(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
/// min(a, 0) elementwise.
Var min_zero(Var a);

/// Row-wise softmax. With a mask (1 = allowed), disallowed entries get probability 0.
Var softmax(Var a);
Var masked_softmax(Var a, std::span<const double> mask);
/// Row-wise log-softmax over allowed entries; disallowed entries are returned as 0.
Var masked_log_softmax(Var a, std::span<const double> mask);

/// Sum of all entries -> [1, 1].
Var sum(Var a);
Var mean(Var a);
/// Sum over columns -> [m, 1].
Var sum_cols(Var a);
/// Sum over rows -> [1, n].
Var sum_rows(Var a);

/// out[r] = a[r, index[r]] -> [m, 1].
Var gather_cols(Var a, std::span<const std::size_t> index);
Var reshape(Var a, Shape shape);
Var concat_cols(std::span<const Var> parts);
/// Stacks parts with equal column counts on top of each other.
Var concat_rows(std::span<const Var> parts);
/// out[r] = a[index[r], :]; indices may repeat.
Var gather_rows(Var a, std::span<const std::size_t> index);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
/// Row r of a[m, n] becomes rows r*k .. r*k+k-1 of the [m*k, n] output.
Var repeat_rows(Var a, std::size_t k);
/// Mean over consecutive groups of k rows: [m*k, n] -> [m, n].
Var mean_row_groups(Var a, std::size_t k);
/// Per-row vector-matrix product: q[B, N] with w[B, N*E] viewed as B matrices [N, E] -> [B, E].
Var batched_vecmat(Var q, Var w, std::size_t e);

/// Detached copy: same value, no gradient flows back.
Var detach(Var a);

/// Quantile-Huber loss (kappa = 1) between predicted quantiles pred[B, K] at
/// fractions tau[B, K] and target samples target[B, K'] (constants). Each row
/// is weighted by mask[B]; the result is the masked mean over rows of the
/// per-row mean over (K, K') pairs.
Var quantile_huber_loss(Var pred, const Tensor& tau, const Tensor& target, std::span<const double> mask);

}  // namespace hf::ad
