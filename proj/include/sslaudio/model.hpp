// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sslaudio/ops.hpp"
#include "sslaudio/tensor.hpp"

namespace sslaudio {

struct ModelConfig {
  int num_blocks = 12;
  int embed_dim = 256;
  int num_heads = 8;
  int ffn_dim = 1024;
  int latent_dim = 256;
  int stack_factor = 4;
  int kernel_first = 31;
  int kernel_rest = 15;
  double dropout = 0.1;
  int num_mel_bands = 64;
  int mask_span = 10;  // latent frames per mask span

  /// 12 blocks, 256-D, 8 heads.
  static ModelConfig cf_s();
  /// 12 blocks, 768-D, 12 heads.
  static ModelConfig cf_l();
  /// "cf_S" or "cf_L"; throws ConfigError otherwise.
  static ModelConfig preset(std::string_view name);

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class InitKind { kFanInUniform, kZeros, kOnes, kUnitUniform };

struct ParameterSpec {
  std::string name;
  Shape shape;
  InitKind init = InitKind::kZeros;
  std::size_t fan_in = 0;
  bool trainable = true;  // false for batch-norm running statistics
};

/// Every array the model owns, in a fixed order. Model construction and
/// parameter counting both read this list.
std::vector<ParameterSpec> parameter_layout(const ModelConfig& config);

/// Trainable scalars in feature encoder, mask embedding and context encoder.
std::size_t param_count(const ModelConfig& config);

/// Output rows of time stacking for a sequence of `frames` input rows.
std::size_t stacked_length(std::size_t frames, int stack_factor);

/// Concatenates every `stack_factor` consecutive rows of each sequence
/// (seq_len rows each) into one row; trailing remainder rows are dropped.
template <typename T>
Tensor<T> time_stack(const Tensor<T>& x, int stack_factor, std::size_t seq_len);

/// Contiguous spans of `span` frames at uniform start positions, added until
/// at least `rate` of the `length` frames are covered. Spans may overlap.
std::vector<bool> sample_mask(std::size_t length, double rate, std::size_t span, ops::Rng& rng);

/// Masks each of the `length / seq_len` sequences independently.
std::vector<bool> sample_batch_mask(std::size_t length, std::size_t seq_len, double rate,
                                    std::size_t span, ops::Rng& rng);

/// Rows flagged in `mask` replaced by the shared embedding. `z` is untouched.
template <typename T>
Tensor<T> apply_mask(const Tensor<T>& z, const std::vector<bool>& mask,
                     const Tensor<T>& mask_embedding);

template <typename T>
struct LatentSequence {
  Tensor<T> z;             // (B * L') x latent_dim
  std::vector<bool> mask;  // B * L' flags
  std::size_t seq_len = 0;
};

/// Per-pass state: mode, sequence length, dropout stream, and running
/// statistic updates held back until the step succeeds.
template <typename T>
struct ForwardContext {
  bool training = false;
  std::size_t seq_len = 0;
  ops::Rng* dropout_rng = nullptr;
  std::vector<std::function<void()>> deferred_updates;

  void commit() {
    for (auto& update : deferred_updates) update();
    deferred_updates.clear();
  }
};

template <typename T>
class ConformerModel {
 public:
  ConformerModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  /// `logmel` stacks B sequences of `seq_len` frames; result has
  /// stacked_length(seq_len) rows per sequence and an all-false mask.
  LatentSequence<T> feature_encode(const Tensor<T>& logmel, std::size_t seq_len) const;

  Tensor<T> context_encode(const Tensor<T>& z_masked, ForwardContext<T>& ctx) const;

  /// One conformer block, exposed for testing and gradient checks.
  Tensor<T> block_forward(std::size_t index, const Tensor<T>& x, ForwardContext<T>& ctx) const;

  /// Q/K/V projections, attention and output projection of block `index`,
  /// without the surrounding layer-norm and residual.
  Tensor<T> self_attention(std::size_t index, const Tensor<T>& x, ForwardContext<T>& ctx) const;

  const Tensor<T>& mask_embedding() const { return param("mask_embedding"); }

  const Tensor<T>& param(const std::string& name) const;
  Tensor<T>& param(const std::string& name);
  bool has_param(const std::string& name) const { return index_.count(name) != 0; }

  /// Trainable tensors in layout order.
  std::vector<std::pair<std::string, Tensor<T>>> parameters() const;
  /// Non-trainable state (batch-norm running statistics).
  std::vector<std::pair<std::string, Tensor<T>>> buffers() const;
  std::size_t num_trainable() const;

  void zero_grad();

  /// Copies every array by name from another model of the same config,
  /// converting precision.
  template <typename U>
  void copy_from(const ConformerModel<U>& other);

 private:
  Tensor<T> linear(const std::string& prefix, const Tensor<T>& x) const;
  Tensor<T> layer_norm(const std::string& prefix, const Tensor<T>& x) const;
  Tensor<T> dropout(const Tensor<T>& x, ForwardContext<T>& ctx) const;
  Tensor<T> feed_forward(const std::string& prefix, const Tensor<T>& x,
                         ForwardContext<T>& ctx) const;
  Tensor<T> conv_module(const std::string& prefix, const Tensor<T>& x,
                        ForwardContext<T>& ctx) const;

  ModelConfig config_;
  std::vector<ParameterSpec> layout_;
  std::vector<Tensor<T>> arrays_;
  std::map<std::string, std::size_t> index_;
};

template <typename T>
template <typename U>
void ConformerModel<T>::copy_from(const ConformerModel<U>& other) {
  if (!(other.config() == config_)) throw ContractError("copy_from: model configs differ");
  auto copy_group = [&](const auto& source) {
    for (const auto& [name, tensor] : source) {
      auto dst = param(name).mutable_values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(tensor.values()[i]);
    }
  };
  copy_group(other.parameters());
  copy_group(other.buffers());
}

extern template class ConformerModel<float>;
extern template class ConformerModel<double>;

}  // namespace sslaudio
