// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sslaudio/rng.hpp"

namespace sslaudio {

template <typename T>
double adam_update(const std::vector<std::pair<std::string, Tensor<T>>>& params,
                   OptimizerState<T>& state, double lr, const AdamConfig& config) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ContractError("learning rate must be >= 0");
  double sq = 0.0;
  for (const auto& [name, p] : params) {
    for (T g : p.grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NumericError("non-finite gradient for '" + name + "'; step aborted");
      }
      sq += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("gradient norm overflow; step aborted");
  double clip = 1.0;
  if (config.max_grad_norm > 0.0 && norm > config.max_grad_norm) clip = config.max_grad_norm / norm;

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const double decay = 1.0 - lr * config.weight_decay;
  for (const auto& [name, p] : params) {
    Tensor<T> param = p;
    auto values = param.mutable_values();
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() != values.size()) m.assign(values.size(), T{0});
    if (v.size() != values.size()) v.assign(values.size(), T{0});
    const auto grad = param.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad.empty() ? 0.0 : clip * static_cast<double>(grad[i]);
      const double mi = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      const double vi = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = (mi / correction1) / (std::sqrt(vi / correction2) + config.eps);
      values[i] = static_cast<T>(decay * values[i] - lr * update);
    }
  }
  return norm;
}

void PretrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("pretrain." + what); };
  if (num_distractors < 0) fail("num_distractors must be >= 0");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) fail("mask_rate must be in (0, 1)");
  if (!(peak_lr >= 0.0)) fail("peak_lr must be >= 0");
  if (warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (warmup_steps >= total_steps) fail("warmup_steps must be < total_steps");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("betas must be in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  if (!(max_grad_norm >= 0.0)) fail("max_grad_norm must be >= 0");
  if (!(temperature > 0.0)) fail("temperature must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
}

AdamConfig PretrainConfig::adam() const {
  return AdamConfig{beta1, beta2, adam_eps, weight_decay, max_grad_norm};
}

std::vector<std::size_t> sample_distractors(std::span<const std::size_t> mask_indices,
                                            std::size_t t, int num_distractors, ops::Rng& rng) {
  if (num_distractors < 0) throw ContractError("num_distractors must be >= 0");
  std::vector<std::size_t> others;
  others.reserve(mask_indices.size());
  bool found = false;
  for (std::size_t i : mask_indices) {
    if (i == t) {
      found = true;
    } else {
      others.push_back(i);
    }
  }
  if (!found) throw ContractError("sample_distractors: t is not a masked index");
  const std::size_t k = std::min(static_cast<std::size_t>(num_distractors), others.size());
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
    std::swap(others[i], others[pick(rng)]);
  }
  others.resize(k);
  return others;
}

template <typename T>
Tensor<T> candidate_contrastive_loss(const Tensor<T>& context, const Tensor<T>& latents,
                                     std::span<const std::size_t> candidates, std::size_t width,
                                     double temperature) {
  if (context.rank() != 2 || latents.rank() != 2 || context.cols() != latents.cols()) {
    throw ContractError("contrastive loss: context and latents widths differ");
  }
  if (!(temperature > 0.0)) throw ContractError("temperature must be > 0");
  auto sim = ops::matmul_nt(ops::row_normalize(context), ops::row_normalize(latents));
  auto logits = ops::take_along_rows(sim, candidates, width);
  if (temperature != 1.0) logits = ops::scale(logits, 1.0 / temperature);
  auto log_probs = ops::log_softmax(logits);
  std::vector<std::size_t> first(context.rows(), 0);
  auto target = ops::take_along_rows(log_probs, std::span<const std::size_t>(first), 1);
  return ops::scale(ops::mean(target), -1.0);
}

template <typename T>
Tensor<T> contrastive_loss(const Tensor<T>& context, const Tensor<T>& latents,
                           const std::vector<bool>& mask, std::size_t seq_len,
                           int num_distractors, ops::Rng& rng, double temperature) {
  if (context.shape() != latents.shape() || context.rank() != 2) {
    throw ContractError("contrastive loss: C and Z shapes differ");
  }
  if (mask.size() != context.rows()) throw ContractError("contrastive loss: mask length differs");
  if (seq_len == 0 || context.rows() % seq_len != 0) {
    throw ContractError("contrastive loss: rows not divisible by seq_len");
  }
  Tensor<T> total;
  std::size_t clips = 0;
  for (std::size_t s = 0; s < context.rows() / seq_len; ++s) {
    std::vector<std::size_t> positions;
    for (std::size_t t = 0; t < seq_len; ++t) {
      if (mask[s * seq_len + t]) positions.push_back(t);
    }
    if (positions.empty()) continue;
    // Local index of each masked position among the masked rows.
    std::vector<std::size_t> local(seq_len, 0);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      local[positions[i]] = i;
      rows.push_back(s * seq_len + positions[i]);
    }
    const std::size_t width =
        1 + std::min(static_cast<std::size_t>(num_distractors), positions.size() - 1);
    std::vector<std::size_t> candidates;
    candidates.reserve(positions.size() * width);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      candidates.push_back(i);
      for (std::size_t d : sample_distractors(positions, positions[i], num_distractors, rng)) {
        candidates.push_back(local[d]);
      }
    }
    auto c = ops::gather_rows(context, std::span<const std::size_t>(rows));
    auto z = ops::gather_rows(latents, std::span<const std::size_t>(rows));
    auto clip_loss = candidate_contrastive_loss(c, z, std::span<const std::size_t>(candidates),
                                                width, temperature);
    total = total.defined() ? ops::add(total, clip_loss) : clip_loss;
    ++clips;
  }
  if (clips == 0) throw ContractError("contrastive loss: no masked steps");
  return clips == 1 ? total : ops::scale(total, 1.0 / static_cast<double>(clips));
}

double pretrain_lr(std::int64_t step, const PretrainConfig& config) {
  if (step < 0) throw ContractError("step must be >= 0");
  const auto s = static_cast<double>(step);
  const auto warmup = static_cast<double>(config.warmup_steps);
  const auto total = static_cast<double>(config.total_steps);
  if (step <= config.warmup_steps) {
    return config.warmup_steps == 0 ? config.peak_lr : config.peak_lr * (s / warmup);
  }
  if (step >= config.total_steps) return 0.0;
  return config.peak_lr * ((total - s) / (total - warmup));
}

PretrainStepStats pretrain_step(const Tensor<float>& logmel, std::size_t seq_len,
                                ConformerModel<float>& model, OptimizerState<float>& state,
                                const PretrainConfig& config, std::int64_t step) {
  config.validate();
  auto mask_rng = make_stream(config.seed, StreamPurpose::kMask, static_cast<std::uint64_t>(step));
  auto distractor_rng =
      make_stream(config.seed, StreamPurpose::kDistractor, static_cast<std::uint64_t>(step));
  auto dropout_rng =
      make_stream(config.seed, StreamPurpose::kDropout, static_cast<std::uint64_t>(step));

  const auto params = model.parameters();
  for (const auto& [name, p] : params) p.clear_grad();
  PretrainStepStats stats;
  try {
    Graph<float> graph;
    ForwardContext<float> ctx;
    ctx.training = true;
    ctx.dropout_rng = &dropout_rng;
    {
      GraphScope<float> scope(graph);
      auto latent = model.feature_encode(logmel, seq_len);
      ctx.seq_len = latent.seq_len;
      latent.mask = sample_batch_mask(latent.z.rows(), latent.seq_len, config.mask_rate,
                                      static_cast<std::size_t>(model.config().mask_span), mask_rng);
      auto masked = apply_mask(latent.z, latent.mask, model.mask_embedding());
      auto context = model.context_encode(masked, ctx);
      auto loss = contrastive_loss(context, latent.z, latent.mask, latent.seq_len,
                                   config.num_distractors, distractor_rng, config.temperature);
      stats.loss = loss.item();
      stats.masked_fraction =
          static_cast<double>(std::count(latent.mask.begin(), latent.mask.end(), true)) /
          static_cast<double>(latent.mask.size());
      backward(graph, loss);
    }
    stats.lr = pretrain_lr(step + 1, config);
    stats.grad_norm = adam_update(params, state, stats.lr, config.adam());
    ctx.commit();
  } catch (...) {
    for (const auto& [name, p] : params) p.clear_grad();
    throw;
  }
  for (const auto& [name, p] : params) p.clear_grad();
  return stats;
}

template double adam_update(const std::vector<std::pair<std::string, Tensor<float>>>&,
                            OptimizerState<float>&, double, const AdamConfig&);
template double adam_update(const std::vector<std::pair<std::string, Tensor<double>>>&,
                            OptimizerState<double>&, double, const AdamConfig&);
template Tensor<float> candidate_contrastive_loss(const Tensor<float>&, const Tensor<float>&,
                                                  std::span<const std::size_t>, std::size_t,
                                                  double);
template Tensor<double> candidate_contrastive_loss(const Tensor<double>&, const Tensor<double>&,
                                                   std::span<const std::size_t>, std::size_t,
                                                   double);
template Tensor<float> contrastive_loss(const Tensor<float>&, const Tensor<float>&,
                                        const std::vector<bool>&, std::size_t, int, ops::Rng&,
                                        double);
template Tensor<double> contrastive_loss(const Tensor<double>&, const Tensor<double>&,
                                         const std::vector<bool>&, std::size_t, int, ops::Rng&,
                                         double);

}  // namespace sslaudio
