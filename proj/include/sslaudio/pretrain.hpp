// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sslaudio/model.hpp"
#include "sslaudio/ops.hpp"
#include "sslaudio/tensor.hpp"

namespace sslaudio {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double max_grad_norm = 0.0;  // 0 disables clipping
};

template <typename T>
struct OptimizerState {
  std::int64_t step = 0;
  std::map<std::string, std::vector<T>> first_moment;
  std::map<std::string, std::vector<T>> second_moment;
};

/// Bias-corrected Adam with decoupled weight decay on every named parameter,
/// reading gradients from the grad slots (absent slot = zero gradient).
/// Returns the global gradient L2 norm before clipping. Throws NumericError
/// on a non-finite gradient before touching any parameter or moment.
template <typename T>
double adam_update(const std::vector<std::pair<std::string, Tensor<T>>>& params,
                   OptimizerState<T>& state, double lr, const AdamConfig& config);

struct PretrainConfig {
  int num_distractors = 100;
  double mask_rate = 0.30;
  double peak_lr = 3e-4;
  std::int64_t warmup_steps = 10000;
  std::int64_t total_steps = 300000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  double max_grad_norm = 0.0;
  double temperature = 1.0;
  int batch_size = 8;
  std::uint64_t seed = 0;

  void validate() const;
  AdamConfig adam() const;
};

/// min(K, |mask_indices| - 1) distinct entries of mask_indices other than t,
/// uniformly without replacement.
std::vector<std::size_t> sample_distractors(std::span<const std::size_t> mask_indices,
                                            std::size_t t, int num_distractors, ops::Rng& rng);

/// Mean over anchors of -log softmax(sim / temperature)[0], where sim is the
/// cosine similarity between anchor row i of `context` and the rows of
/// `latents` listed in candidates[i * width .. i * width + width), the true
/// target first.
template <typename T>
Tensor<T> candidate_contrastive_loss(const Tensor<T>& context, const Tensor<T>& latents,
                                     std::span<const std::size_t> candidates, std::size_t width,
                                     double temperature = 1.0);

/// Contrastive loss over a batch of clips of `seq_len` rows each: for every
/// masked step, distractors come from the other masked steps of the same clip.
/// Averaged over masked steps per clip, then over clips with a masked step.
template <typename T>
Tensor<T> contrastive_loss(const Tensor<T>& context, const Tensor<T>& latents,
                           const std::vector<bool>& mask, std::size_t seq_len,
                           int num_distractors, ops::Rng& rng, double temperature = 1.0);

/// Linear warmup to peak_lr, then linear decay to zero at total_steps.
double pretrain_lr(std::int64_t step, const PretrainConfig& config);

struct PretrainStepStats {
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  double masked_fraction = 0.0;
};

/// One optimizer update (update number step + 1). `logmel` stacks B clips of
/// `seq_len` frames. Either the whole update is applied, including
/// batch-norm statistics, or nothing is.
PretrainStepStats pretrain_step(const Tensor<float>& logmel, std::size_t seq_len,
                                ConformerModel<float>& model, OptimizerState<float>& state,
                                const PretrainConfig& config, std::int64_t step);

}  // namespace sslaudio
