// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sslaudio/rng.hpp"

namespace sslaudio {

HeadKind parse_head_kind(std::string_view name) {
  if (name == "linear-softmax-pool") return HeadKind::kLinearSoftmaxPool;
  if (name == "mean-pool") return HeadKind::kMeanPool;
  throw ConfigError("unknown head '" + std::string(name) +
                    "' (expected linear-softmax-pool or mean-pool)");
}

std::string head_kind_name(HeadKind kind) {
  return kind == HeadKind::kLinearSoftmaxPool ? "linear-softmax-pool" : "mean-pool";
}

void FinetuneConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("finetune." + what); };
  if (num_classes < 1) fail("num_classes must be >= 1");
  if (!(peak_lr >= 0.0)) fail("peak_lr must be >= 0");
  if (total_steps < 1) fail("total_steps must be >= 1");
  double sum = 0.0;
  for (double f : stage_fractions) {
    if (!(f > 0.0)) fail("stage_fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail("stage_fractions must sum to 1");
  if (!(final_lr_factor > 0.0 && final_lr_factor <= 1.0)) fail("final_lr_factor must be in (0, 1]");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(output_dropout >= 0.0 && output_dropout < 1.0)) fail("output_dropout must be in [0, 1)");
  if (!(consistency_weight >= 0.0)) fail("consistency_weight must be >= 0");
  if (max_jitter < 0) fail("max_jitter must be >= 0");
  if (max_mask_frames < 0) fail("max_mask_frames must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("betas must be in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
  if (!(max_grad_norm >= 0.0)) fail("max_grad_norm must be >= 0");
}

AdamConfig FinetuneConfig::adam() const {
  return AdamConfig{beta1, beta2, adam_eps, weight_decay, max_grad_norm};
}

int sample_jitter_shift(ops::Rng& rng, int max_shift) {
  std::uniform_int_distribution<int> shift(-max_shift, max_shift);
  return shift(rng);
}

dsp::Waveform shift_waveform(const dsp::Waveform& waveform, int shift) {
  dsp::Waveform out;
  out.sample_rate = waveform.sample_rate;
  const auto n = static_cast<std::ptrdiff_t>(waveform.samples.size());
  out.samples.assign(waveform.samples.size(), 0.0f);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t src = i - shift;
    if (src >= 0 && src < n) out.samples[static_cast<std::size_t>(i)] = waveform.samples[static_cast<std::size_t>(src)];
  }
  return out;
}

dsp::Waveform temporal_jitter(const dsp::Waveform& waveform, ops::Rng& rng, int max_shift) {
  if (waveform.samples.size() <= static_cast<std::size_t>(max_shift)) {
    throw InputError("temporal jitter needs more than " + std::to_string(max_shift) +
                     " samples, got " + std::to_string(waveform.samples.size()));
  }
  return shift_waveform(waveform, sample_jitter_shift(rng, max_shift));
}

dsp::LogmelSpectrogram apply_time_mask(const dsp::LogmelSpectrogram& spec, std::size_t start,
                                       std::size_t length) {
  if (start + length > spec.num_frames) throw ContractError("time mask exceeds the clip");
  dsp::LogmelSpectrogram out = spec;
  if (length == 0) return out;
  double mean = 0.0;
  for (float v : spec.values) mean += v;
  mean /= static_cast<double>(spec.values.size());
  std::fill(out.values.begin() + static_cast<std::ptrdiff_t>(start * spec.num_bands),
            out.values.begin() + static_cast<std::ptrdiff_t>((start + length) * spec.num_bands),
            static_cast<float>(mean));
  return out;
}

dsp::LogmelSpectrogram time_mask_augment(const dsp::LogmelSpectrogram& spec, ops::Rng& rng,
                                         int max_frames) {
  if (spec.num_frames == 0) throw InputError("time mask on an empty spectrogram");
  const std::size_t cap = std::min(static_cast<std::size_t>(std::max(max_frames, 0)),
                                   spec.num_frames);
  std::uniform_int_distribution<std::size_t> length_dist(0, cap);
  const std::size_t length = length_dist(rng);
  std::uniform_int_distribution<std::size_t> start_dist(0, spec.num_frames - length);
  return apply_time_mask(spec, start_dist(rng), length);
}

double sample_beta(double a, double b, ops::Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x + y > 0.0 ? x / (x + y) : 0.5;
}

void mix_into(std::vector<float>& x, const std::vector<float>& other, double alpha) {
  if (x.size() != other.size()) throw ContractError("mixup needs equal-sized clips");
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = static_cast<float>(alpha * x[j] + (1.0 - alpha) * other[j]);
  }
}

MixupInfo mixup_batch(std::vector<dsp::LogmelSpectrogram>& clips, ops::Rng& rng) {
  MixupInfo info;
  info.partner.resize(clips.size());
  std::iota(info.partner.begin(), info.partner.end(), std::size_t{0});
  info.alpha.assign(clips.size(), 1.0);
  if (clips.size() < 2) return info;
  for (std::size_t i = 1; i < clips.size(); ++i) {
    if (clips[i].values.size() != clips[0].values.size()) {
      throw ContractError("mixup needs equal-sized clips");
    }
  }
  std::shuffle(info.partner.begin(), info.partner.end(), rng);
  const auto original = clips;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const double a = effective_mixup_alpha(sample_beta(0.5, 0.5, rng));
    info.alpha[i] = a;
    mix_into(clips[i].values, original[info.partner[i]].values, a);
  }
  return info;
}

double three_stage_lr(std::int64_t step, const FinetuneConfig& config) {
  if (step < 0) throw ContractError("step must be >= 0");
  const auto total = static_cast<double>(config.total_steps);
  const auto warm_end = std::llround(config.stage_fractions[0] * total);
  const auto hold_end =
      std::llround((config.stage_fractions[0] + config.stage_fractions[1]) * total);
  if (step < warm_end) {
    return config.peak_lr * (static_cast<double>(step) / static_cast<double>(warm_end));
  }
  if (step <= hold_end) return config.peak_lr;
  const double span = static_cast<double>(config.total_steps - hold_end);
  const double progress = std::min(1.0, static_cast<double>(step - hold_end) / span);
  return config.peak_lr * std::pow(config.final_lr_factor, progress);
}

std::vector<double> balance_weights(const std::vector<std::vector<float>>& targets) {
  if (targets.empty()) throw InputError("balance_weights: empty dataset");
  const std::size_t classes = targets.front().size();
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].size() != classes) throw InputError("balance_weights: ragged targets");
    for (std::size_t c = 0; c < classes; ++c) {
      if (targets[i][c] > 0.5f) ++counts[c];
    }
  }
  std::vector<double> weights(targets.size(), 0.0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      if (targets[i][c] > 0.5f) {
        weights[i] = std::max(weights[i], 1.0 / static_cast<double>(counts[c]));
      }
    }
    if (weights[i] == 0.0) {
      throw InputError("example " + std::to_string(i) + " has no positive label");
    }
  }
  return weights;
}

WeightedSampler::WeightedSampler(const std::vector<double>& weights)
    : distribution_(weights.begin(), weights.end()) {
  if (weights.empty()) throw InputError("sampler needs at least one example");
}

std::size_t WeightedSampler::sample(ops::Rng& rng) const { return distribution_(rng); }

template <typename T>
ClassificationHead<T>::ClassificationHead(HeadKind kind, int input_dim, int num_classes,
                                          std::uint64_t seed)
    : kind_(kind), num_classes_(num_classes) {
  if (input_dim < 1 || num_classes < 1) throw ConfigError("head dimensions must be positive");
  const auto in = static_cast<std::size_t>(input_dim);
  const auto out = static_cast<std::size_t>(num_classes);
  auto rng = make_stream(seed, StreamPurpose::kInit, 1, 0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<T> w(in * out);
  for (auto& v : w) v = static_cast<T>(u(rng));
  weight_ = Tensor<T>({in, out}, std::move(w), true);
  bias_ = Tensor<T>::zeros({out}, true);
}

template <typename T>
Tensor<T> ClassificationHead<T>::forward(const Tensor<T>& context, std::size_t seq_len) const {
  if (seq_len == 0 || context.rows() % seq_len != 0) {
    throw InputError("classification head needs a non-empty sequence");
  }
  if (kind_ == HeadKind::kLinearSoftmaxPool) {
    auto frame_probs = ops::sigmoid(ops::linear(context, weight_, bias_));
    return ops::linear_softmax_pool(frame_probs, seq_len);
  }
  return ops::sigmoid(ops::linear(ops::segment_mean(context, seq_len), weight_, bias_));
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> ClassificationHead<T>::parameters() const {
  return {{"head.weight", weight_}, {"head.bias", bias_}};
}

template <typename T>
Tensor<T>& ClassificationHead<T>::param(const std::string& name) {
  if (name == "head.weight") return weight_;
  if (name == "head.bias") return bias_;
  throw ContractError("no head array named '" + name + "'");
}

template <typename T>
const Tensor<T>& ClassificationHead<T>::param(const std::string& name) const {
  return const_cast<ClassificationHead<T>*>(this)->param(name);
}

Tensor<float> stack_logmels(const std::vector<dsp::LogmelSpectrogram>& clips,
                            std::size_t* seq_len) {
  if (clips.empty()) throw InputError("empty batch");
  std::size_t frames = clips.front().num_frames;
  for (const auto& c : clips) frames = std::min(frames, c.num_frames);
  const std::size_t bands = clips.front().num_bands;
  if (frames == 0) throw InputError("empty spectrogram in batch");
  std::vector<float> values;
  values.reserve(clips.size() * frames * bands);
  for (const auto& c : clips) {
    if (c.num_bands != bands) throw InputError("band counts differ within a batch");
    values.insert(values.end(), c.values.begin(),
                  c.values.begin() + static_cast<std::ptrdiff_t>(frames * bands));
  }
  *seq_len = frames;
  return Tensor<float>({clips.size() * frames, bands}, std::move(values));
}

namespace {

std::vector<dsp::LogmelSpectrogram> augmented_view(
    const std::vector<const LabeledExample*>& batch, const FinetuneConfig& config,
    const dsp::LogmelExtractor& extractor, ops::Rng& rng) {
  std::vector<dsp::LogmelSpectrogram> clips;
  clips.reserve(batch.size());
  for (const auto* example : batch) {
    auto spec = config.jitter_enabled
                    ? extractor.extract(temporal_jitter(example->waveform, rng, config.max_jitter))
                    : extractor.extract(example->waveform);
    if (config.timemask_enabled) spec = time_mask_augment(spec, rng, config.max_mask_frames);
    clips.push_back(std::move(spec));
  }
  // Mixup needs equal lengths; crop to the shortest clip first.
  std::size_t frames = clips.front().num_frames;
  for (const auto& c : clips) frames = std::min(frames, c.num_frames);
  for (auto& c : clips) {
    c.values.resize(frames * c.num_bands);
    c.num_frames = frames;
  }
  if (config.mixup_enabled) mixup_batch(clips, rng);
  return clips;
}

Tensor<float> forward_view(const std::vector<dsp::LogmelSpectrogram>& clips,
                           const ConformerModel<float>& model,
                           const ClassificationHead<float>& head, ForwardContext<float>& ctx,
                           double output_dropout) {
  std::size_t seq_len = 0;
  auto x = stack_logmels(clips, &seq_len);
  auto latent = model.feature_encode(x, seq_len);
  ctx.seq_len = latent.seq_len;
  auto c = model.context_encode(latent.z, ctx);
  if (ctx.training && output_dropout > 0.0 && ctx.dropout_rng != nullptr) {
    c = ops::dropout(c, output_dropout, *ctx.dropout_rng, true);
  }
  return head.forward(c, latent.seq_len);
}

}  // namespace

FinetuneStepStats finetune_step(const std::vector<const LabeledExample*>& batch,
                                ConformerModel<float>& model, ClassificationHead<float>& head,
                                OptimizerState<float>& state, const FinetuneConfig& config,
                                std::int64_t step, const dsp::LogmelExtractor& extractor) {
  config.validate();
  if (batch.empty()) throw InputError("empty fine-tuning batch");
  const std::size_t classes = static_cast<std::size_t>(config.num_classes);
  std::vector<float> target_values;
  for (const auto* example : batch) {
    if (example->targets.size() != classes) {
      throw InputError("target vector has " + std::to_string(example->targets.size()) +
                       " classes, expected " + std::to_string(classes));
    }
    target_values.insert(target_values.end(), example->targets.begin(), example->targets.end());
  }
  Tensor<float> targets({batch.size(), classes}, std::move(target_values));

  auto params = model.parameters();
  for (const auto& p : head.parameters()) params.push_back(p);
  for (const auto& [name, p] : params) p.clear_grad();

  const auto s = static_cast<std::uint64_t>(step);
  const bool two_views = config.consistency_weight > 0.0;
  FinetuneStepStats stats;
  try {
    Graph<float> graph;
    ForwardContext<float> ctx1, ctx2;
    auto aug1 = make_stream(config.seed, StreamPurpose::kAugment, s, 0);
    auto aug2 = make_stream(config.seed, StreamPurpose::kAugment, s, 1);
    auto drop1 = make_stream(config.seed, StreamPurpose::kDropout, s, 0);
    auto drop2 = make_stream(config.seed, StreamPurpose::kDropout, s, 1);
    ctx1.training = ctx2.training = true;
    ctx1.dropout_rng = &drop1;
    ctx2.dropout_rng = &drop2;
    {
      GraphScope<float> scope(graph);
      auto p1 = forward_view(augmented_view(batch, config, extractor, aug1), model, head, ctx1,
                             config.output_dropout);
      auto bce = bce_loss(p1, targets);
      auto total = bce;
      stats.bce = bce.item();
      if (two_views) {
        auto p2 = forward_view(augmented_view(batch, config, extractor, aug2), model, head, ctx2,
                               config.output_dropout);
        auto cons = consistency_loss(p1, p2);
        stats.consistency = cons.item();
        total = ops::add(bce, ops::scale(cons, config.consistency_weight));
      }
      stats.total = total.item();
      backward(graph, total);
    }
    stats.lr = three_stage_lr(std::min(step + 1, config.total_steps), config);
    stats.grad_norm = adam_update(params, state, stats.lr, config.adam());
    // Running statistics follow the first view only.
    ctx1.commit();
  } catch (...) {
    for (const auto& [name, p] : params) p.clear_grad();
    throw;
  }
  for (const auto& [name, p] : params) p.clear_grad();
  return stats;
}

std::vector<std::vector<float>> predict_probabilities(
    const std::vector<const LabeledExample*>& examples, const ConformerModel<float>& model,
    const ClassificationHead<float>& head, const dsp::LogmelExtractor& extractor,
    std::size_t batch_size) {
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  NoGradScope<float> no_grad;
  std::vector<std::vector<float>> out;
  out.reserve(examples.size());
  // Clips of equal length are batched together; others run alone.
  std::size_t i = 0;
  while (i < examples.size()) {
    std::vector<dsp::LogmelSpectrogram> clips;
    const std::size_t n = examples[i]->waveform.samples.size();
    std::size_t j = i;
    while (j < examples.size() && j - i < batch_size &&
           examples[j]->waveform.samples.size() == n) {
      clips.push_back(extractor.extract(examples[j]->waveform));
      ++j;
    }
    ForwardContext<float> ctx;
    auto probs = forward_view(clips, model, head, ctx, 0.0);
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      out.emplace_back(probs.values().begin() + static_cast<std::ptrdiff_t>(r * probs.cols()),
                       probs.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * probs.cols()));
    }
    i = j;
  }
  return out;
}

std::vector<std::size_t> sample_finetune_batch(std::size_t num_examples,
                                               const WeightedSampler* sampler,
                                               const FinetuneConfig& config, std::int64_t step) {
  if (num_examples == 0) throw InputError("no training examples");
  const auto s = static_cast<std::uint64_t>(step);
  std::vector<std::size_t> out;
  if (sampler != nullptr && config.balance_enabled) {
    auto rng = make_stream(config.seed, StreamPurpose::kBalance, s);
    for (int i = 0; i < config.batch_size; ++i) out.push_back(sampler->sample(rng));
  } else {
    auto rng = make_stream(config.seed, StreamPurpose::kDataOrder, s);
    std::uniform_int_distribution<std::size_t> pick(0, num_examples - 1);
    for (int i = 0; i < config.batch_size; ++i) out.push_back(pick(rng));
  }
  return out;
}

template class ClassificationHead<float>;
template class ClassificationHead<double>;

}  // namespace sslaudio
