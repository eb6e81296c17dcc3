// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "sslaudio/gradsuite.hpp"

using namespace sslaudio;

TEST(GradientSuiteTest, EveryRowBelowThreshold) {
  auto rows = run_gradient_suite();
  EXPECT_GE(rows.size(), 2u * 36u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.passed) << r.name << " " << r.precision << ": " << r.max_relative_error;
    EXPECT_GT(r.coordinates, 0u) << r.name;
  }
}
