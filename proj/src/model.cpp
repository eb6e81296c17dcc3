// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/model.hpp"

#include <cmath>
#include <random>

#include "sslaudio/rng.hpp"

namespace sslaudio {

namespace {

constexpr double kBatchNormMomentum = 0.1;

std::string block_prefix(std::size_t index) { return "blocks." + std::to_string(index) + "."; }

void add_linear(std::vector<ParameterSpec>& out, const std::string& prefix, std::size_t in,
                std::size_t width, bool with_bias = true) {
  out.push_back({prefix + ".weight", {in, width}, InitKind::kFanInUniform, in, true});
  if (with_bias) out.push_back({prefix + ".bias", {width}, InitKind::kZeros, 0, true});
}

void add_norm(std::vector<ParameterSpec>& out, const std::string& prefix, std::size_t width) {
  out.push_back({prefix + ".gamma", {width}, InitKind::kOnes, 0, true});
  out.push_back({prefix + ".beta", {width}, InitKind::kZeros, 0, true});
}

}  // namespace

ModelConfig ModelConfig::cf_s() { return ModelConfig{}; }

ModelConfig ModelConfig::cf_l() {
  ModelConfig c;
  c.embed_dim = 768;
  c.latent_dim = 768;
  c.num_heads = 12;
  return c;
}

ModelConfig ModelConfig::preset(std::string_view name) {
  if (name == "cf_S") return cf_s();
  if (name == "cf_L") return cf_l();
  throw ConfigError("unknown model preset '" + std::string(name) + "' (expected cf_S or cf_L)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model." + what); };
  if (num_blocks < 0) fail("num_blocks must be >= 0");
  if (embed_dim < 1) fail("embed_dim must be >= 1");
  if (num_heads < 1) fail("num_heads must be >= 1");
  if (embed_dim % num_heads != 0) fail("embed_dim must be divisible by num_heads");
  if (ffn_dim < 1) fail("ffn_dim must be >= 1");
  if (latent_dim < 1) fail("latent_dim must be >= 1");
  if (stack_factor < 1) fail("stack_factor must be >= 1");
  if (kernel_first < 1 || kernel_first % 2 == 0) fail("kernel_first must be odd");
  if (kernel_rest < 1 || kernel_rest % 2 == 0) fail("kernel_rest must be odd");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (num_mel_bands < 1) fail("num_mel_bands must be >= 1");
  if (mask_span < 1) fail("mask_span must be >= 1");
}

std::vector<ParameterSpec> parameter_layout(const ModelConfig& config) {
  config.validate();
  const auto d = static_cast<std::size_t>(config.embed_dim);
  const auto dz = static_cast<std::size_t>(config.latent_dim);
  const auto ffn = static_cast<std::size_t>(config.ffn_dim);
  const auto stacked = static_cast<std::size_t>(config.num_mel_bands * config.stack_factor);

  std::vector<ParameterSpec> out;
  add_linear(out, "feature", stacked, dz);
  out.push_back({"mask_embedding", {1, dz}, InitKind::kUnitUniform, 0, true});
  add_linear(out, "context.in", dz, d);
  for (int b = 0; b < config.num_blocks; ++b) {
    const std::string p = block_prefix(static_cast<std::size_t>(b));
    const auto kernel = static_cast<std::size_t>(b == 0 ? config.kernel_first : config.kernel_rest);
    add_norm(out, p + "ff1.norm", d);
    add_linear(out, p + "ff1.up", d, ffn);
    add_linear(out, p + "ff1.down", ffn, d);
    add_norm(out, p + "conv.norm", d);
    add_linear(out, p + "conv.pw1", d, 2 * d);
    out.push_back({p + "conv.dw.weight", {d, 1, kernel}, InitKind::kFanInUniform, kernel, true});
    add_norm(out, p + "conv.bn", d);
    out.push_back({p + "conv.bn.running_mean", {d}, InitKind::kZeros, 0, false});
    out.push_back({p + "conv.bn.running_var", {d}, InitKind::kOnes, 0, false});
    add_linear(out, p + "conv.pw2", d, d);
    add_norm(out, p + "mhsa.norm", d);
    add_linear(out, p + "mhsa.q", d, d);
    add_linear(out, p + "mhsa.k", d, d, /*with_bias=*/false);
    add_linear(out, p + "mhsa.v", d, d);
    add_linear(out, p + "mhsa.out", d, d);
    add_norm(out, p + "ff2.norm", d);
    add_linear(out, p + "ff2.up", d, ffn);
    add_linear(out, p + "ff2.down", ffn, d);
    add_norm(out, p + "final_norm", d);
  }
  add_linear(out, "context.out", d, dz);
  return out;
}

std::size_t param_count(const ModelConfig& config) {
  std::size_t total = 0;
  for (const auto& spec : parameter_layout(config)) {
    if (spec.trainable) total += shape_size(spec.shape);
  }
  return total;
}

std::size_t stacked_length(std::size_t frames, int stack_factor) {
  return frames / static_cast<std::size_t>(stack_factor);
}

template <typename T>
Tensor<T> time_stack(const Tensor<T>& x, int stack_factor, std::size_t seq_len) {
  if (stack_factor < 1) throw ConfigError("stack_factor must be >= 1");
  if (x.rank() != 2) throw DimensionError("time_stack expects a 2-D input");
  if (seq_len == 0 || x.rows() % seq_len != 0) {
    throw DimensionError("time_stack: rows not divisible by seq_len");
  }
  const auto r = static_cast<std::size_t>(stack_factor);
  if (seq_len < r) {
    throw InputError("time_stack needs at least " + std::to_string(r) + " frames, got " +
                     std::to_string(seq_len));
  }
  if (r == 1) return x;
  const std::size_t out_len = seq_len / r;
  const std::size_t nseq = x.rows() / seq_len;
  Tensor<T> kept = x;
  if (out_len * r != seq_len) {
    std::vector<std::size_t> rows;
    rows.reserve(nseq * out_len * r);
    for (std::size_t s = 0; s < nseq; ++s) {
      for (std::size_t t = 0; t < out_len * r; ++t) rows.push_back(s * seq_len + t);
    }
    kept = ops::gather_rows(x, std::span<const std::size_t>(rows));
  }
  return ops::reshape(kept, {nseq * out_len, x.cols() * r});
}

std::vector<bool> sample_mask(std::size_t length, double rate, std::size_t span, ops::Rng& rng) {
  if (length == 0) throw ContractError("sample_mask: empty sequence");
  if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("mask rate must be in (0, 1)");
  if (span < 1) throw ConfigError("mask span must be >= 1");
  if (span > length) {
    throw ConfigError("mask span " + std::to_string(span) + " exceeds sequence length " +
                      std::to_string(length));
  }
  std::vector<bool> mask(length, false);
  std::uniform_int_distribution<std::size_t> start(0, length - span);
  std::size_t covered = 0;
  const double target = rate * static_cast<double>(length) - 1e-9;
  while (static_cast<double>(covered) < target) {
    const std::size_t s = start(rng);
    for (std::size_t i = s; i < s + span; ++i) {
      if (!mask[i]) {
        mask[i] = true;
        ++covered;
      }
    }
  }
  return mask;
}

std::vector<bool> sample_batch_mask(std::size_t length, std::size_t seq_len, double rate,
                                    std::size_t span, ops::Rng& rng) {
  if (seq_len == 0 || length % seq_len != 0) {
    throw ContractError("sample_batch_mask: length not divisible by seq_len");
  }
  std::vector<bool> mask;
  mask.reserve(length);
  for (std::size_t s = 0; s < length / seq_len; ++s) {
    auto part = sample_mask(seq_len, rate, span, rng);
    mask.insert(mask.end(), part.begin(), part.end());
  }
  return mask;
}

template <typename T>
Tensor<T> apply_mask(const Tensor<T>& z, const std::vector<bool>& mask,
                     const Tensor<T>& mask_embedding) {
  return ops::mask_rows(z, mask, mask_embedding);
}

template <typename T>
ConformerModel<T>::ConformerModel(ModelConfig config, std::uint64_t seed)
    : config_(config), layout_(parameter_layout(config)) {
  arrays_.reserve(layout_.size());
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const auto& spec = layout_[i];
    std::vector<T> values(shape_size(spec.shape));
    auto rng = make_stream(seed, StreamPurpose::kInit, 0, i);
    switch (spec.init) {
      case InitKind::kZeros:
        break;
      case InitKind::kOnes:
        std::fill(values.begin(), values.end(), T{1});
        break;
      case InitKind::kFanInUniform: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& v : values) v = static_cast<T>(u(rng));
        break;
      }
      case InitKind::kUnitUniform: {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : values) v = static_cast<T>(u(rng));
        break;
      }
    }
    index_[spec.name] = i;
    arrays_.emplace_back(spec.shape, std::move(values), spec.trainable);
  }
}

template <typename T>
const Tensor<T>& ConformerModel<T>::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no model array named '" + name + "'");
  return arrays_[it->second];
}

template <typename T>
Tensor<T>& ConformerModel<T>::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("no model array named '" + name + "'");
  return arrays_[it->second];
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> ConformerModel<T>::parameters() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].trainable) out.emplace_back(layout_[i].name, arrays_[i]);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> ConformerModel<T>::buffers() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (!layout_[i].trainable) out.emplace_back(layout_[i].name, arrays_[i]);
  }
  return out;
}

template <typename T>
std::size_t ConformerModel<T>::num_trainable() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].trainable) n += arrays_[i].size();
  }
  return n;
}

template <typename T>
void ConformerModel<T>::zero_grad() {
  for (auto& a : arrays_) a.clear_grad();
}

template <typename T>
Tensor<T> ConformerModel<T>::linear(const std::string& prefix, const Tensor<T>& x) const {
  const std::string bias = prefix + ".bias";
  return ops::linear(x, param(prefix + ".weight"), has_param(bias) ? param(bias) : Tensor<T>());
}

template <typename T>
Tensor<T> ConformerModel<T>::layer_norm(const std::string& prefix, const Tensor<T>& x) const {
  return ops::layer_norm(x, param(prefix + ".gamma"), param(prefix + ".beta"));
}

// Dropout is active only in training mode with a stream supplied, so gradient
// checks can run training-mode batch-norm deterministically.
template <typename T>
Tensor<T> ConformerModel<T>::dropout(const Tensor<T>& x, ForwardContext<T>& ctx) const {
  if (!ctx.training || ctx.dropout_rng == nullptr || config_.dropout == 0.0) return x;
  return ops::dropout(x, config_.dropout, *ctx.dropout_rng, true);
}

template <typename T>
Tensor<T> ConformerModel<T>::feed_forward(const std::string& prefix, const Tensor<T>& x,
                                          ForwardContext<T>& ctx) const {
  auto h = layer_norm(prefix + ".norm", x);
  h = dropout(ops::swish(linear(prefix + ".up", h)), ctx);
  return dropout(linear(prefix + ".down", h), ctx);
}

template <typename T>
Tensor<T> ConformerModel<T>::conv_module(const std::string& prefix, const Tensor<T>& x,
                                         ForwardContext<T>& ctx) const {
  auto h = ops::glu(linear(prefix + ".pw1", layer_norm(prefix + ".norm", x)));
  h = ops::conv1d(h, param(prefix + ".dw.weight"), Tensor<T>(), h.cols(), ops::Padding::kSame,
                  ctx.seq_len);
  Tensor<T> running_mean = param(prefix + ".bn.running_mean");
  Tensor<T> running_var = param(prefix + ".bn.running_var");
  ops::BatchStats<T> stats;
  h = ops::batch_norm(h, param(prefix + ".bn.gamma"), param(prefix + ".bn.beta"),
                      running_mean.values(), running_var.values(), ctx.training, 1e-5,
                      ctx.training ? &stats : nullptr);
  if (ctx.training) {
    ctx.deferred_updates.push_back(
        [running_mean, running_var, stats = std::move(stats)]() mutable {
          auto m = running_mean.mutable_values();
          auto v = running_var.mutable_values();
          for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] = static_cast<T>((1.0 - kBatchNormMomentum) * m[i] +
                                  kBatchNormMomentum * stats.mean[i]);
            v[i] = static_cast<T>((1.0 - kBatchNormMomentum) * v[i] +
                                  kBatchNormMomentum * stats.unbiased_var[i]);
          }
        });
  }
  h = linear(prefix + ".pw2", ops::swish(h));
  return dropout(h, ctx);
}

template <typename T>
Tensor<T> ConformerModel<T>::self_attention(std::size_t index, const Tensor<T>& x,
                                            ForwardContext<T>& ctx) const {
  if (ctx.seq_len == 0 || x.rows() % ctx.seq_len != 0) {
    throw ContractError("self_attention: rows not divisible by seq_len");
  }
  const std::string p = block_prefix(index) + "mhsa";
  auto q = linear(p + ".q", x);
  auto k = linear(p + ".k", x);
  auto v = linear(p + ".v", x);
  auto a = ops::attention(q, k, v, static_cast<std::size_t>(config_.num_heads), ctx.seq_len);
  return linear(p + ".out", a);
}

template <typename T>
Tensor<T> ConformerModel<T>::block_forward(std::size_t index, const Tensor<T>& x,
                                           ForwardContext<T>& ctx) const {
  if (index >= static_cast<std::size_t>(config_.num_blocks)) {
    throw ContractError("block index out of range");
  }
  const std::string p = block_prefix(index);
  try {
    auto h = ops::add(x, ops::scale(feed_forward(p + "ff1", x, ctx), 0.5));
    h = ops::add(h, conv_module(p + "conv", h, ctx));
    h = ops::add(h, dropout(self_attention(index, layer_norm(p + "mhsa.norm", h), ctx), ctx));
    h = ops::add(h, ops::scale(feed_forward(p + "ff2", h, ctx), 0.5));
    return layer_norm(p + "final_norm", h);
  } catch (const NumericError& e) {
    throw NumericError("conformer block " + std::to_string(index) + ": " + e.what());
  }
}

template <typename T>
LatentSequence<T> ConformerModel<T>::feature_encode(const Tensor<T>& logmel,
                                                    std::size_t seq_len) const {
  if (logmel.rank() != 2 || logmel.cols() != static_cast<std::size_t>(config_.num_mel_bands)) {
    throw DimensionError("feature_encode expects " + std::to_string(config_.num_mel_bands) +
                         " bands, got shape " + shape_string(logmel.shape()));
  }
  auto stacked = time_stack(logmel, config_.stack_factor, seq_len);
  LatentSequence<T> out;
  out.z = linear("feature", stacked);
  out.seq_len = stacked_length(seq_len, config_.stack_factor);
  out.mask.assign(out.z.rows(), false);
  return out;
}

template <typename T>
Tensor<T> ConformerModel<T>::context_encode(const Tensor<T>& z_masked,
                                            ForwardContext<T>& ctx) const {
  if (z_masked.rank() != 2 || z_masked.cols() != static_cast<std::size_t>(config_.latent_dim)) {
    throw DimensionError("context_encode expects width " + std::to_string(config_.latent_dim) +
                         ", got shape " + shape_string(z_masked.shape()));
  }
  if (ctx.seq_len == 0 || z_masked.rows() % ctx.seq_len != 0) {
    throw ContractError("context_encode: rows not divisible by seq_len");
  }
  auto h = linear("context.in", z_masked);
  for (std::size_t b = 0; b < static_cast<std::size_t>(config_.num_blocks); ++b) {
    h = block_forward(b, h, ctx);
  }
  return linear("context.out", h);
}

template Tensor<float> time_stack(const Tensor<float>&, int, std::size_t);
template Tensor<double> time_stack(const Tensor<double>&, int, std::size_t);
template Tensor<float> apply_mask(const Tensor<float>&, const std::vector<bool>&,
                                  const Tensor<float>&);
template Tensor<double> apply_mask(const Tensor<double>&, const std::vector<bool>&,
                                   const Tensor<double>&);
template class ConformerModel<float>;
template class ConformerModel<double>;

}  // namespace sslaudio
