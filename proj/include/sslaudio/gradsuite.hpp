// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sslaudio {

struct GradSuiteRow {
  std::string name;
  std::string precision;  // "float32" or "float64"
  double max_relative_error = 0.0;
  double threshold = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

struct GradSuiteOptions {
  std::size_t points_per_leaf = 10;
  double float_threshold = 1e-3;
  double double_threshold = 1e-5;
  std::uint64_t seed = 0;
  bool primitives = true;
  bool block = true;
  bool end_to_end = true;
};

/// Every differentiable primitive, one conformer block at d = 32, and the
/// contrastive loss of a 2-block model at T' = 6, each checked in single
/// precision (float analytic vs double differences) and in double precision.
std::vector<GradSuiteRow> run_gradient_suite(const GradSuiteOptions& options = {});

}  // namespace sslaudio
