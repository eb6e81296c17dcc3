// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/training.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

#include "sslaudio/error.hpp"
#include "sslaudio/rng.hpp"

namespace sslaudio {

std::vector<std::size_t> sample_pretrain_batch(std::size_t num_clips, const PretrainConfig& config,
                                               std::int64_t step) {
  if (num_clips == 0) throw InputError("no pretraining clips");
  auto rng = make_stream(config.seed, StreamPurpose::kDataOrder, static_cast<std::uint64_t>(step));
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> out;
  if (batch <= num_clips) {
    std::vector<std::size_t> all(num_clips);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (std::size_t i = 0; i < batch; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, num_clips - 1);
      std::swap(all[i], all[pick(rng)]);
      out.push_back(all[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, num_clips - 1);
    for (std::size_t i = 0; i < batch; ++i) out.push_back(pick(rng));
  }
  return out;
}

void run_pretraining(const std::vector<dsp::LogmelSpectrogram>& clips, ConformerModel<float>& model,
                     OptimizerState<float>& state, const PretrainConfig& config,
                     std::int64_t first_step, std::int64_t end_step,
                     const PretrainCallback& on_step) {
  for (std::int64_t step = first_step; step < end_step; ++step) {
    std::vector<dsp::LogmelSpectrogram> batch;
    for (std::size_t i : sample_pretrain_batch(clips.size(), config, step)) batch.push_back(clips[i]);
    std::size_t seq_len = 0;
    const auto x = stack_logmels(batch, &seq_len);
    const auto stats = pretrain_step(x, seq_len, model, state, config, step);
    if (on_step) on_step(step + 1, stats);
  }
}

void run_finetuning(const std::vector<LabeledExample>& examples, ConformerModel<float>& model,
                    ClassificationHead<float>& head, OptimizerState<float>& state,
                    const FinetuneConfig& config, std::int64_t first_step, std::int64_t end_step,
                    const dsp::LogmelExtractor& extractor, const FinetuneCallback& on_step) {
  if (examples.empty()) throw InputError("no fine-tuning examples");
  std::unique_ptr<WeightedSampler> sampler;
  if (config.balance_enabled) {
    std::vector<std::vector<float>> targets;
    for (const auto& e : examples) targets.push_back(e.targets);
    sampler = std::make_unique<WeightedSampler>(balance_weights(targets));
  }
  for (std::int64_t step = first_step; step < end_step; ++step) {
    std::vector<const LabeledExample*> batch;
    for (std::size_t i : sample_finetune_batch(examples.size(), sampler.get(), config, step)) {
      batch.push_back(&examples[i]);
    }
    const auto stats = finetune_step(batch, model, head, state, config, step, extractor);
    if (on_step) on_step(step + 1, stats);
  }
}

}  // namespace sslaudio
