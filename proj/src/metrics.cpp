// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "sslaudio/error.hpp"

namespace sslaudio {

std::optional<double> average_precision(std::span<const float> scores,
                                        std::span<const float> targets) {
  if (scores.size() != targets.size()) throw EvaluationError("scores and targets differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (targets[order[rank]] > 0.5f) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

MapResult mean_average_precision(const std::vector<std::vector<float>>& scores,
                                 const std::vector<std::vector<float>>& targets) {
  if (scores.size() != targets.size() || scores.empty()) {
    throw EvaluationError("score and target matrices must be non-empty and equal in rows");
  }
  const std::size_t classes = scores.front().size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].size() != classes || targets[i].size() != classes) {
      throw EvaluationError("ragged row " + std::to_string(i));
    }
  }
  MapResult result;
  std::vector<float> s(scores.size()), t(scores.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      s[i] = scores[i][c];
      t[i] = targets[i][c];
    }
    auto ap = average_precision(s, t);
    if (ap) {
      sum += *ap;
      ++result.included;
    }
    result.per_class.push_back(ap);
  }
  if (result.included == 0) throw EvaluationError("no class has a positive example");
  result.mean = sum / static_cast<double>(result.included);
  return result;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.empty()) throw EvaluationError("accuracy of an empty set");
  if (predicted.size() != truth.size()) throw EvaluationError("prediction count differs");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

std::size_t argmax(std::span<const float> values) {
  if (values.empty()) throw EvaluationError("argmax of an empty vector");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

EvalReport evaluate_predictions(const std::vector<std::vector<float>>& scores,
                                const std::vector<std::vector<float>>& targets) {
  auto map = mean_average_precision(scores, targets);
  EvalReport report;
  report.per_class_ap = map.per_class;
  report.map = map.mean;
  report.num_examples = scores.size();
  bool single = true;
  std::vector<std::size_t> predicted, truth;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto positives = std::count_if(targets[i].begin(), targets[i].end(),
                                         [](float v) { return v > 0.5f; });
    if (positives != 1) {
      single = false;
      break;
    }
    predicted.push_back(argmax(scores[i]));
    truth.push_back(argmax(targets[i]));
  }
  if (single) report.accuracy = accuracy(predicted, truth);
  return report;
}

}  // namespace sslaudio
