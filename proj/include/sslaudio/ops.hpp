// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "sslaudio/tensor.hpp"

// Differentiable primitives. Each one validates shapes, computes its output,
// rejects non-finite results, and records a backward rule on the active graph
// when any input requires grad. Matrices are 2-D row-major; a "sequence batch"
// is B sequences of equal length L stacked into (B*L) rows, with L passed as
// `seq_len`.
namespace sslaudio::ops {

using Rng = std::mt19937_64;

enum class Padding { kSame, kValid };

template <typename T>
struct BatchStats {
  std::vector<T> mean;
  std::vector<T> unbiased_var;
};

// Linear algebra and shape plumbing.
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// a * b^T
template <typename T> Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& x);
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
// Concatenates 2-D tensors along rows (axis 0) or columns (axis 1).
template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis);
template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows);
// out[r][j] = x[r][index[r * width + j]]
template <typename T>
Tensor<T> take_along_rows(const Tensor<T>& x,
                          std::span<const std::size_t> index, std::size_t width);

// Elementwise arithmetic.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
// x + bias broadcast over rows; bias has cols(x) entries.
template <typename T> Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);
template <typename T> Tensor<T> scale(const Tensor<T>& x, double factor);
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Reductions.
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
// (B*L) x C -> B x C
template <typename T> Tensor<T> segment_mean(const Tensor<T>& x, std::size_t seq_len);

// Normalization.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps = 1e-5);
// Per-column statistics over all rows. Training mode normalizes with batch
// statistics and reports them through `batch_stats`; evaluation mode uses the
// running estimates.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, std::span<const T> running_mean,
                     std::span<const T> running_var, bool training,
                     double eps = 1e-5, BatchStats<T>* batch_stats = nullptr);
// Row-wise x / max(||x||, eps).
template <typename T>
Tensor<T> row_normalize(const Tensor<T>& x, double eps = 1e-8);

// Activations.
template <typename T> Tensor<T> softmax(const Tensor<T>& x);
template <typename T> Tensor<T> log_softmax(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> swish(const Tensor<T>& x);
// First half of the columns gated by the sigmoid of the second half.
template <typename T> Tensor<T> glu(const Tensor<T>& x);
// Inverted dropout; the keep mask is drawn from `rng` and kept for backward.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, bool training);

// Cross-correlation over time of an (B*L) x C_in sequence batch with a
// [C_out, C_in/groups, k] kernel. `bias` may be undefined.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& kernel,
                 const Tensor<T>& bias, std::size_t groups, Padding padding,
                 std::size_t seq_len);

// softmax(Q K^T / sqrt(d_head)) V per head and per sequence; heads occupy
// contiguous column blocks of width d / num_heads.
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    std::size_t num_heads, std::size_t seq_len);

// Rows with mask[r] set are replaced by `replacement` (1 x C).
template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, const std::vector<bool>& mask,
                    const Tensor<T>& replacement);

// Per sequence and column: sum(y^2) / sum(y), or 0 when sum(y) == 0.
template <typename T>
Tensor<T> linear_softmax_pool(const Tensor<T>& frame_probs, std::size_t seq_len);

// Mean over all entries; probabilities are clamped to [clamp, 1 - clamp].
template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets,
                               double clamp = 1e-7);
// Mean over entries of KL(p||q) + KL(q||p) between independent Bernoullis.
template <typename T>
Tensor<T> symmetric_bernoulli_kl(const Tensor<T>& p, const Tensor<T>& q,
                                 double clamp = 1e-7);

}  // namespace sslaudio::ops
