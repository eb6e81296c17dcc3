// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslaudio/finetune.hpp"
#include "sslaudio/model.hpp"
#include "sslaudio/pretrain.hpp"

namespace sslaudio {

inline constexpr int kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> values;

  bool operator==(const NamedArray&) const = default;
};

struct HeadInfo {
  HeadKind kind = HeadKind::kLinearSoftmaxPool;
  int num_classes = 0;
  std::vector<std::string> vocabulary;

  bool operator==(const HeadInfo&) const = default;
};

struct Checkpoint {
  ModelConfig model;
  std::vector<NamedArray> arrays;  // parameters and buffers, then head arrays
  std::optional<HeadInfo> head;
  std::optional<OptimizerState<float>> optimizer;
  std::int64_t step = 0;
  std::uint64_t seed = 0;

  const NamedArray* find(const std::string& name) const;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
/// Strict: unknown keys and wrong types throw ConfigError. Missing keys keep
/// the values already in `base`.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

Checkpoint capture_checkpoint(const ConformerModel<float>& model,
                              const ClassificationHead<float>* head = nullptr,
                              const HeadInfo* head_info = nullptr,
                              const OptimizerState<float>* optimizer = nullptr,
                              std::int64_t step = 0, std::uint64_t seed = 0);

/// Copies parameters and buffers into `model`. A different architecture
/// throws ConfigError.
void restore_model(const Checkpoint& checkpoint, ConformerModel<float>& model);
void restore_head(const Checkpoint& checkpoint, ClassificationHead<float>& head);

/// Directory with header.json and tensors.bin (little-endian float32).
/// Written under a temporary name and renamed into place.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& checkpoint);
/// Throws IoError if unreadable, CorruptionError on version, shape or size mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace sslaudio
