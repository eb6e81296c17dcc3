// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sslaudio/dsp.hpp"
#include "sslaudio/model.hpp"
#include "sslaudio/pretrain.hpp"

namespace sslaudio {

enum class HeadKind { kLinearSoftmaxPool, kMeanPool };

/// "linear-softmax-pool" or "mean-pool"; throws ConfigError otherwise.
HeadKind parse_head_kind(std::string_view name);
std::string head_kind_name(HeadKind kind);

struct FinetuneConfig {
  HeadKind head = HeadKind::kLinearSoftmaxPool;
  int num_classes = 0;
  double peak_lr = 1e-4;
  std::int64_t total_steps = 10000;
  std::array<double, 3> stage_fractions{0.3, 0.3, 0.4};
  double final_lr_factor = 0.01;
  int batch_size = 16;
  double output_dropout = 0.0;
  bool mixup_enabled = true;
  bool jitter_enabled = true;
  bool timemask_enabled = true;
  double consistency_weight = 2.0;
  bool balance_enabled = true;
  int max_jitter = 200;        // samples
  int max_mask_frames = 100;   // 2 s at a 20 ms hop
  double beta1 = 0.9;
  double beta2 = 0.98;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  double max_grad_norm = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  AdamConfig adam() const;
};

struct LabeledExample {
  dsp::Waveform waveform;
  std::vector<float> targets;  // multi-hot over num_classes
};

int sample_jitter_shift(ops::Rng& rng, int max_shift = 200);
/// Positive shifts delay the signal; vacated samples are zero.
dsp::Waveform shift_waveform(const dsp::Waveform& waveform, int shift);
/// Requires more than max_shift samples.
dsp::Waveform temporal_jitter(const dsp::Waveform& waveform, ops::Rng& rng, int max_shift = 200);

/// Frames [start, start + length) of every band set to the clip's mean value.
dsp::LogmelSpectrogram apply_time_mask(const dsp::LogmelSpectrogram& spec, std::size_t start,
                                       std::size_t length);
/// One interval of uniform length in [0, min(max_frames, T)] at a uniform start.
dsp::LogmelSpectrogram time_mask_augment(const dsp::LogmelSpectrogram& spec, ops::Rng& rng,
                                         int max_frames = 100);

/// Beta(a, b) from two gamma draws.
double sample_beta(double a, double b, ops::Rng& rng);
inline double effective_mixup_alpha(double alpha) { return std::max(alpha, 1.0 - alpha); }

/// x <- alpha x + (1 - alpha) other, elementwise.
void mix_into(std::vector<float>& x, const std::vector<float>& other, double alpha);

struct MixupInfo {
  std::vector<std::size_t> partner;  // x'_i = clips[partner[i]]
  std::vector<double> alpha;         // effective weights, each in [0.5, 1]
};

/// In-place x_i <- a_i x_i + (1 - a_i) x_partner(i), partners from a random
/// permutation. Labels are not touched. Fewer than two clips: no-op.
MixupInfo mixup_batch(std::vector<dsp::LogmelSpectrogram>& clips, ops::Rng& rng);

/// Linear warmup, hold at peak, exponential decay to peak * final_lr_factor.
double three_stage_lr(std::int64_t step, const FinetuneConfig& config);

/// weight_i = max over positive classes c of 1 / count(c).
std::vector<double> balance_weights(const std::vector<std::vector<float>>& targets);

class WeightedSampler {
 public:
  explicit WeightedSampler(const std::vector<double>& weights);
  std::size_t sample(ops::Rng& rng) const;

 private:
  mutable std::discrete_distribution<std::size_t> distribution_;
};

/// Pooling head on context frames, producing per-class probabilities.
template <typename T>
class ClassificationHead {
 public:
  ClassificationHead(HeadKind kind, int input_dim, int num_classes, std::uint64_t seed);

  HeadKind kind() const { return kind_; }
  int num_classes() const { return num_classes_; }

  /// `context` stacks B sequences of `seq_len` frames; result is B x classes.
  Tensor<T> forward(const Tensor<T>& context, std::size_t seq_len) const;

  std::vector<std::pair<std::string, Tensor<T>>> parameters() const;
  Tensor<T>& param(const std::string& name);
  const Tensor<T>& param(const std::string& name) const;

 private:
  HeadKind kind_;
  int num_classes_;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& probs, const Tensor<T>& targets) {
  return ops::binary_cross_entropy(probs, targets);
}

template <typename T>
Tensor<T> consistency_loss(const Tensor<T>& p, const Tensor<T>& q) {
  return ops::symmetric_bernoulli_kl(p, q);
}

/// Logmels of a batch cropped to the shortest clip and stacked row-wise.
Tensor<float> stack_logmels(const std::vector<dsp::LogmelSpectrogram>& clips,
                            std::size_t* seq_len);

struct FinetuneStepStats {
  double bce = 0.0;
  double consistency = 0.0;
  double total = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

/// One update (number step + 1) on two independently augmented views:
/// total = BCE(view 1) + consistency_weight * symKL(view 1, view 2).
FinetuneStepStats finetune_step(const std::vector<const LabeledExample*>& batch,
                                ConformerModel<float>& model, ClassificationHead<float>& head,
                                OptimizerState<float>& state, const FinetuneConfig& config,
                                std::int64_t step, const dsp::LogmelExtractor& extractor);

/// Evaluation-mode probabilities, one row per example.
std::vector<std::vector<float>> predict_probabilities(
    const std::vector<const LabeledExample*>& examples, const ConformerModel<float>& model,
    const ClassificationHead<float>& head, const dsp::LogmelExtractor& extractor,
    std::size_t batch_size = 16);

/// Example indices for one step: balanced draws when enabled, else uniform.
std::vector<std::size_t> sample_finetune_batch(std::size_t num_examples,
                                               const WeightedSampler* sampler,
                                               const FinetuneConfig& config, std::int64_t step);

extern template class ClassificationHead<float>;
extern template class ClassificationHead<double>;

}  // namespace sslaudio
