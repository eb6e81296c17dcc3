// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sslaudio/error.hpp"
#include "sslaudio/metrics.hpp"

using namespace sslaudio;

namespace {

// Pairwise rank counting, independent of sorting.
std::optional<double> brute_force_ap(const std::vector<float>& s, const std::vector<float>& t) {
  auto ahead = [&](std::size_t j, std::size_t i) {
    return s[j] > s[i] || (s[j] == s[i] && j < i);
  };
  double sum = 0;
  int positives = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (t[i] < 0.5f) continue;
    ++positives;
    int rank = 1, hits = 1;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j != i && ahead(j, i)) {
        ++rank;
        if (t[j] > 0.5f) ++hits;
      }
    }
    sum += static_cast<double>(hits) / rank;
  }
  if (positives == 0) return std::nullopt;
  return sum / positives;
}

}  // namespace

TEST(AveragePrecisionTest, HandComputedValues) {
  std::vector<float> scores{0.9f, 0.5f, 0.2f};
  std::vector<float> t{1, 0, 1};
  EXPECT_NEAR(*average_precision(scores, t), (1.0 + 2.0 / 3.0) / 2.0, 1e-12);
  std::vector<float> perfect{1, 1, 0};
  EXPECT_DOUBLE_EQ(*average_precision(scores, perfect), 1.0);
  std::vector<float> last{0, 0, 0, 0, 1};
  std::vector<float> rising{0.1f, 0.2f, 0.3f, 0.4f, 0.05f};
  EXPECT_DOUBLE_EQ(*average_precision(rising, last), 1.0 / 5.0);
  std::vector<float> none{0, 0, 0};
  EXPECT_FALSE(average_precision(scores, none).has_value());
}

TEST(AveragePrecisionTest, TiesKeepInputOrder) {
  std::vector<float> scores{0.5f, 0.5f, 0.5f, 0.5f};
  std::vector<float> t{0, 1, 0, 1};
  EXPECT_NEAR(*average_precision(scores, t), (1.0 / 2.0 + 2.0 / 4.0) / 2.0, 1e-12);
}

TEST(AveragePrecisionTest, InvariantUnderMonotoneTransform) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(0.01f, 1.0f);
  std::bernoulli_distribution b(0.3);
  std::vector<float> s(50), t(50), cubed(50), logged(50);
  for (int i = 0; i < 50; ++i) {
    s[i] = u(rng);
    t[i] = b(rng) ? 1.0f : 0.0f;
    cubed[i] = s[i] * s[i] * s[i];
    logged[i] = std::log(s[i]);
  }
  t[0] = 1;
  const double ap = *average_precision(s, t);
  EXPECT_DOUBLE_EQ(*average_precision(cubed, t), ap);
  EXPECT_DOUBLE_EQ(*average_precision(logged, t), ap);
}

TEST(AveragePrecisionTest, PermutationInvariantForDistinctScores) {
  std::vector<float> s{0.3f, 0.9f, 0.1f, 0.7f, 0.5f};
  std::vector<float> t{1, 0, 1, 1, 0};
  std::vector<float> s2{0.5f, 0.1f, 0.9f, 0.3f, 0.7f};
  std::vector<float> t2{0, 1, 0, 1, 1};
  EXPECT_DOUBLE_EQ(*average_precision(s, t), *average_precision(s2, t2));
}

TEST(MeanAveragePrecisionTest, ArithmeticMeanOverIncludedClasses) {
  std::vector<std::vector<float>> scores{{0.9f, 0.1f, 0.3f}, {0.2f, 0.8f, 0.3f}};
  std::vector<std::vector<float>> targets{{1, 0, 0}, {0, 0, 0}};
  targets[1][1] = 0;
  targets[0][1] = 1;  // class 1 positive ranked second of two
  auto r = mean_average_precision(scores, targets);
  ASSERT_EQ(r.included, 2u);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 1.0);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 0.5);
  EXPECT_FALSE(r.per_class[2].has_value());
  EXPECT_DOUBLE_EQ(r.mean, 0.75);
}

TEST(MeanAveragePrecisionTest, ConstantScoresGivePrevalence) {
  // Ties keep input order, so positives at every other slot sit at precision 1/2.
  std::vector<std::vector<float>> scores(10, std::vector<float>{0.5f, 0.5f});
  std::vector<std::vector<float>> targets(10, std::vector<float>{0, 0});
  for (int i : {1, 3, 5, 7, 9}) targets[i][0] = 1;
  for (int i : {4, 9}) targets[i][1] = 1;
  auto r = mean_average_precision(scores, targets);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.5);
  EXPECT_DOUBLE_EQ(*r.per_class[1], 0.2);
}

TEST(MeanAveragePrecisionTest, OracleOnHundredRandomInstances) {
  std::mt19937 rng(2);
  std::uniform_int_distribution<int> level(0, 9);  // coarse scores force ties
  std::bernoulli_distribution positive(0.35);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<float>> scores(20, std::vector<float>(5));
    std::vector<std::vector<float>> targets(20, std::vector<float>(5));
    for (auto& row : scores) {
      for (auto& v : row) v = static_cast<float>(level(rng)) / 10.0f;
    }
    for (auto& row : targets) {
      for (auto& v : row) v = positive(rng) ? 1.0f : 0.0f;
    }
    auto r = mean_average_precision(scores, targets);
    double sum = 0;
    int included = 0;
    for (int c = 0; c < 5; ++c) {
      std::vector<float> s, t;
      for (int i = 0; i < 20; ++i) {
        s.push_back(scores[i][c]);
        t.push_back(targets[i][c]);
      }
      auto ap = brute_force_ap(s, t);
      ASSERT_EQ(ap.has_value(), r.per_class[c].has_value());
      if (ap) {
        EXPECT_NEAR(*r.per_class[c], *ap, 1e-9);
        sum += *ap;
        ++included;
      }
    }
    EXPECT_NEAR(r.mean, sum / included, 1e-9);
  }
}

TEST(MeanAveragePrecisionTest, OraclePredictorScoresOne) {
  std::vector<std::vector<float>> targets{{1, 0}, {0, 1}, {1, 1}, {0, 0}};
  EXPECT_DOUBLE_EQ(mean_average_precision(targets, targets).mean, 1.0);
}

TEST(MeanAveragePrecisionTest, Errors) {
  std::vector<std::vector<float>> scores{{0.1f, 0.2f}};
  std::vector<std::vector<float>> none{{0, 0}};
  EXPECT_THROW(mean_average_precision(scores, none), EvaluationError);
  std::vector<std::vector<float>> ragged{{1}};
  EXPECT_THROW(mean_average_precision(scores, ragged), EvaluationError);
}

TEST(AccuracyTest, Counting) {
  std::vector<std::size_t> truth{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(accuracy(truth, truth), 1.0);
  std::vector<std::size_t> wrong{1, 2, 3, 0};
  EXPECT_DOUBLE_EQ(accuracy(wrong, truth), 0.0);
  std::vector<std::size_t> three{0, 1, 2, 0};
  EXPECT_DOUBLE_EQ(accuracy(three, truth), 0.75);
  EXPECT_THROW(accuracy(std::vector<std::size_t>{}, std::vector<std::size_t>{}), EvaluationError);
}

TEST(EvalReportTest, AccuracyOnlyForSingleLabel) {
  std::vector<std::vector<float>> scores{{0.9f, 0.1f}, {0.3f, 0.6f}, {0.7f, 0.2f}};
  std::vector<std::vector<float>> single{{1, 0}, {0, 1}, {0, 1}};
  auto r = evaluate_predictions(scores, single);
  ASSERT_TRUE(r.accuracy.has_value());
  EXPECT_NEAR(*r.accuracy, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r.num_examples, 3u);
  std::vector<std::vector<float>> multi{{1, 1}, {0, 1}, {1, 0}};
  EXPECT_FALSE(evaluate_predictions(scores, multi).accuracy.has_value());
}
