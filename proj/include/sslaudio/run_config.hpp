// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "sslaudio/finetune.hpp"
#include "sslaudio/model.hpp"
#include "sslaudio/pretrain.hpp"

namespace sslaudio {

/// Everything a command needs, merged from preset defaults, a JSON config
/// file and command-line flags (in increasing precedence).
struct RunConfig {
  std::string preset = "cf_S";
  bool model_explicit = false;  // preset or model keys given by the user
  ModelConfig model;
  PretrainConfig pretrain;
  FinetuneConfig finetune;
  std::string manifest;
  std::string out_dir = "out";
  std::string init_checkpoint;
  std::uint64_t seed = 0;
  bool deterministic = false;
  std::optional<std::int64_t> max_steps;  // stop early; schedules are unchanged
  std::int64_t checkpoint_every = 1000;
  int eval_batch_size = 16;

  void validate() const;
};

struct CliOverrides {
  std::optional<std::string> preset;
  std::optional<std::string> out_dir;
  std::optional<std::string> init_checkpoint;
  std::optional<std::string> head;
  std::optional<std::string> manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> max_steps;
  bool deterministic = false;
};

/// Unknown keys and wrongly typed values throw ConfigError.
RunConfig resolve_run_config(const nlohmann::json& file, const CliOverrides& cli);
/// Reads the file (if any) and resolves; an unreadable or malformed file is a ConfigError.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const CliOverrides& cli);

nlohmann::json run_config_to_json(const RunConfig& config);

}  // namespace sslaudio
