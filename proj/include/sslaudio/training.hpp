// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sslaudio/dsp.hpp"
#include "sslaudio/finetune.hpp"
#include "sslaudio/model.hpp"
#include "sslaudio/pretrain.hpp"

namespace sslaudio {

/// Clip indices for pretraining update `step`: distinct when batch_size <= n.
std::vector<std::size_t> sample_pretrain_batch(std::size_t num_clips, const PretrainConfig& config,
                                               std::int64_t step);

using PretrainCallback = std::function<void(std::int64_t step, const PretrainStepStats&)>;

/// Runs updates first_step .. end_step - 1 on precomputed logmels. Batches
/// are cropped to their shortest clip. The callback sees the 1-based update
/// number.
void run_pretraining(const std::vector<dsp::LogmelSpectrogram>& clips, ConformerModel<float>& model,
                     OptimizerState<float>& state, const PretrainConfig& config,
                     std::int64_t first_step, std::int64_t end_step,
                     const PretrainCallback& on_step = {});

using FinetuneCallback = std::function<void(std::int64_t step, const FinetuneStepStats&)>;

void run_finetuning(const std::vector<LabeledExample>& examples, ConformerModel<float>& model,
                    ClassificationHead<float>& head, OptimizerState<float>& state,
                    const FinetuneConfig& config, std::int64_t first_step, std::int64_t end_step,
                    const dsp::LogmelExtractor& extractor, const FinetuneCallback& on_step = {});

}  // namespace sslaudio
