// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "sslaudio/run_config.hpp"
#include "sslaudio/synth.hpp"

namespace sslaudio::cli {

void run_pretrain(const RunConfig& config);
void run_finetune(RunConfig config, bool from_scratch);
void run_evaluate(const RunConfig& config, const std::string& split);
void run_extract(const RunConfig& config, const std::filesystem::path& input,
                 std::filesystem::path output);
/// Returns false if any row fails.
bool run_gradcheck(const RunConfig& config);
void run_paramcount(const RunConfig& config);
void run_synthdata(const SynthConfig& config, const std::filesystem::path& out_dir);

/// 0 ok, 2 config, 3 data, 4 numeric, 5 I/O, 1 otherwise.
int exit_code_for_current_exception();

}  // namespace sslaudio::cli
