// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sslaudio {

/// Non-interpolated AP: mean precision at the rank of each positive, scores
/// sorted descending with ties kept in input order. nullopt without positives.
std::optional<double> average_precision(std::span<const float> scores,
                                        std::span<const float> targets);

struct MapResult {
  std::vector<std::optional<double>> per_class;
  double mean = 0.0;
  std::size_t included = 0;
};

/// Rows are examples, columns classes. Classes without positives are
/// excluded; throws EvaluationError if none remain.
MapResult mean_average_precision(const std::vector<std::vector<float>>& scores,
                                 const std::vector<std::vector<float>>& targets);

/// Fraction of equal entries; throws EvaluationError on empty or ragged input.
double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

std::size_t argmax(std::span<const float> values);

struct EvalReport {
  std::vector<std::optional<double>> per_class_ap;
  double map = 0.0;
  std::optional<double> accuracy;  // single-label data only
  std::size_t num_examples = 0;
};

/// Accuracy is reported when every target row has exactly one positive.
EvalReport evaluate_predictions(const std::vector<std::vector<float>>& scores,
                                const std::vector<std::vector<float>>& targets);

}  // namespace sslaudio
