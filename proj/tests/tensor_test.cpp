// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sslaudio/gradcheck.hpp"
#include "sslaudio/ops.hpp"

using namespace sslaudio;

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = normal(rng);
  return Tensor<double>(std::move(shape), std::move(v));
}

// Direct triple loop: out[t][co] = sum_ci sum_j w[co][ci][j] * x[t + j - pad][g*cin_g + ci]
std::vector<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& w,
                                std::size_t groups) {
  const std::size_t T = x.rows(), cin = x.cols(), cout = w.dim(0), cin_g = w.dim(1),
                    k = w.dim(2);
  const long pad = static_cast<long>((k - 1) / 2);
  std::vector<double> out(T * cout, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t co = 0; co < cout; ++co) {
      const std::size_t g = co / (cout / groups);
      for (std::size_t ci = 0; ci < cin_g; ++ci) {
        for (std::size_t j = 0; j < k; ++j) {
          const long ti = static_cast<long>(t + j) - pad;
          if (ti < 0 || ti >= static_cast<long>(T)) continue;
          out[t * cout + co] += w.at(co, ci * k + j) * x.at(ti, g * cin_g + ci);
        }
      }
    }
  }
  (void)cin;
  return out;
}

}  // namespace

TEST(TensorTest, RejectsInconsistentShape) {
  EXPECT_THROW(Tensor<float>({2, 3}, std::vector<float>(5)), DimensionError);
  EXPECT_THROW(Tensor<float>({0, 3}, {}), DimensionError);
}

TEST(OpsTest, MatmulShapeAlgebra) {
  auto a = Tensor<double>::full({2, 3}, 1.0);
  auto b = Tensor<double>::full({3, 4}, 2.0);
  auto c = ops::matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 4}));
  for (double v : c.values()) EXPECT_DOUBLE_EQ(v, 6.0);
  EXPECT_THROW(ops::matmul(b, b), DimensionError);
}

TEST(OpsTest, SoftmaxOfZerosIsUniform) {
  auto y = ops::softmax(Tensor<double>::zeros({1, 3}));
  for (double v : y.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(OpsTest, LayerNormRowsAreStandardized) {
  std::mt19937_64 rng(3);
  auto x = random_tensor({5, 16}, rng, 3.0);
  auto y = ops::layer_norm(x, Tensor<double>::full({16}, 1.0), Tensor<double>::zeros({16}));
  for (std::size_t r = 0; r < 5; ++r) {
    double mu = 0, var = 0;
    for (std::size_t c = 0; c < 16; ++c) mu += y.at(r, c);
    mu /= 16;
    for (std::size_t c = 0; c < 16; ++c) var += (y.at(r, c) - mu) * (y.at(r, c) - mu);
    var /= 16;
    EXPECT_NEAR(mu, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-5);  // eps = 1e-5 inside the sqrt
  }
}

TEST(OpsTest, NonFiniteOutputIsNumericError) {
  auto x = Tensor<double>({1, 2}, {1e308, 1e308});
  EXPECT_THROW(ops::scale(x, 10.0), NumericError);
}

TEST(OpsTest, ReshapeRejectsWrongSize) {
  EXPECT_THROW(ops::reshape(Tensor<double>::zeros({2, 3}), {4, 2}), DimensionError);
}

TEST(Conv1dTest, DepthwiseIdentityKernel) {
  std::mt19937_64 rng(1);
  auto x = random_tensor({9, 4}, rng);
  std::vector<double> w(4 * 1 * 5, 0.0);
  for (std::size_t c = 0; c < 4; ++c) w[c * 5 + 2] = 1.0;
  auto y = ops::conv1d(x, Tensor<double>({4, 1, 5}, w), Tensor<double>(), 4,
                       ops::Padding::kSame, 9);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.values()[i], x.values()[i]);
}

TEST(Conv1dTest, SamePaddingKeepsLength) {
  std::mt19937_64 rng(2);
  for (std::size_t k : {1u, 3u, 4u, 15u, 31u}) {
    auto x = random_tensor({6, 3}, rng);
    auto w = random_tensor({3, 1, k}, rng);
    EXPECT_EQ(ops::conv1d(x, w, Tensor<double>(), 3, ops::Padding::kSame, 6).rows(), 6u);
  }
}

TEST(Conv1dTest, KernelLongerThanInputIsDimensionError) {
  auto x = Tensor<double>::zeros({4, 2});
  auto w = Tensor<double>::zeros({2, 1, 5});
  EXPECT_THROW(ops::conv1d(x, w, Tensor<double>(), 2, ops::Padding::kValid, 4), DimensionError);
}

TEST(Conv1dTest, MatchesTripleLoopOracle) {
  std::mt19937_64 rng(7);
  for (std::size_t groups : {1u, 2u, 4u}) {
    auto x = random_tensor({8, 4}, rng);
    auto w = random_tensor({4, 4 / groups, 3}, rng);
    auto y = ops::conv1d(x, w, Tensor<double>(), groups, ops::Padding::kSame, 8);
    const auto expected = conv_oracle(x, w, groups);
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y.values()[i], expected[i], 1e-6);
  }
}

TEST(BackwardTest, ProductRule) {
  auto x = Tensor<double>::scalar(2.0, true);
  auto y = Tensor<double>::scalar(5.0, true);
  Graph<double> graph;
  GraphScope<double> scope(graph);
  backward(graph, ops::mul(x, y));
  EXPECT_DOUBLE_EQ(x.grad()[0], 5.0);
  EXPECT_DOUBLE_EQ(y.grad()[0], 2.0);
}

TEST(BackwardTest, SumOfSquares) {
  auto x = Tensor<double>({3}, {1, 2, 3}, true);
  Graph<double> graph;
  GraphScope<double> scope(graph);
  backward(graph, ops::sum(ops::mul(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
  EXPECT_DOUBLE_EQ(x.grad()[2], 6.0);
}

TEST(BackwardTest, NonScalarLossIsContractError) {
  auto x = Tensor<double>({3}, {1, 2, 3}, true);
  Graph<double> graph;
  GraphScope<double> scope(graph);
  auto y = ops::scale(x, 2.0);
  EXPECT_THROW(backward(graph, y), ContractError);
}

TEST(BackwardTest, FanOutAccumulatesLikeDuplicatedLeaves) {
  std::mt19937_64 rng(11);
  auto w = random_tensor({4, 4}, rng);
  auto base = random_tensor({3, 4}, rng);

  // f(x) = sum(swish(x W) * x) uses x on two paths.
  auto x = base.clone(true);
  {
    Graph<double> graph;
    GraphScope<double> scope(graph);
    backward(graph, ops::sum(ops::mul(ops::swish(ops::matmul(x, w)), x)));
  }
  auto x1 = base.clone(true);
  auto x2 = base.clone(true);
  {
    Graph<double> graph;
    GraphScope<double> scope(graph);
    backward(graph, ops::sum(ops::mul(ops::swish(ops::matmul(x1, w)), x2)));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(x.grad()[i], x1.grad()[i] + x2.grad()[i], 1e-12);
  }
}

TEST(BackwardTest, UnrecordedWithoutActiveGraph) {
  auto x = Tensor<double>({2}, {1, 2}, true);
  auto y = ops::scale(x, 3.0);
  EXPECT_FALSE(y.requires_grad());
}

TEST(GradCheckTest, QuadraticIsExact) {
  std::mt19937_64 rng(5);
  auto point = random_tensor({7}, rng);
  auto result = grad_check<double>(
      [](const Tensor<double>& x) { return ops::sum(ops::mul(x, x)); }, point, 1e-4);
  EXPECT_LT(result.max_relative_error, 1e-6);
  EXPECT_EQ(result.coordinates, 7u);
}

TEST(GradCheckTest, ZeroEpsIsRejected) {
  auto point = Tensor<double>({2}, {1, 2});
  EXPECT_THROW(grad_check<double>([](const Tensor<double>& x) { return ops::sum(x); }, point, 0.0),
               ContractError);
}

TEST(GradCheckTest, NonFiniteFunctionIsNumericError) {
  auto f = [](const Tensor<double>& x) { return ops::sum(ops::scale(x, 1e308)); };
  EXPECT_THROW(grad_check<double>(f, Tensor<double>({1}, {10.0}), 1e-4), NumericError);
}

TEST(GradCheckTest, ThreeLayerCompositeMatchesDifferences) {
  std::mt19937_64 rng(9);
  auto w1 = random_tensor({5, 8}, rng, 0.5);
  auto w2 = random_tensor({8, 8}, rng, 0.5);
  auto w3 = random_tensor({8, 3}, rng, 0.5);
  auto x = random_tensor({4, 5}, rng);
  auto loss = [&] {
    auto h = ops::swish(ops::matmul(x, w1));
    h = ops::sigmoid(ops::matmul(h, w2));
    return ops::mean(ops::log_softmax(ops::matmul(h, w3)));
  };
  auto result = grad_check_leaves<double>(loss, {w1, w2, w3, x}, 1e-4);
  EXPECT_LT(result.max_relative_error, 1e-5);
}

TEST(DropoutTest, FixedSeedGivesFixedMask) {
  auto x = Tensor<double>::full({4, 8}, 1.0);
  ops::Rng a(42), b(42);
  auto ya = ops::dropout(x, 0.5, a, true);
  auto yb = ops::dropout(x, 0.5, b, true);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(ya.values()[i], yb.values()[i]);
    EXPECT_TRUE(ya.values()[i] == 0.0 || ya.values()[i] == 2.0);
  }
  ops::Rng c(1);
  auto eval = ops::dropout(x, 0.5, c, false);
  for (double v : eval.values()) EXPECT_EQ(v, 1.0);
}

TEST(BatchNormTest, EvalUsesRunningStatistics) {
  auto x = Tensor<double>({2, 2}, {1.0, 2.0, 3.0, 4.0});
  std::vector<double> rm{1.0, 2.0}, rv{4.0, 1.0};
  auto y = ops::batch_norm(x, Tensor<double>::full({2}, 1.0), Tensor<double>::zeros({2}),
                           std::span<const double>(rm), std::span<const double>(rv), false, 0.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(y.at(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(y.at(1, 1), 2.0);
}

TEST(BatchNormTest, TrainingReportsUnbiasedBatchVariance) {
  auto x = Tensor<double>({3, 1}, {1.0, 2.0, 6.0});
  std::vector<double> rm{0.0}, rv{1.0};
  ops::BatchStats<double> stats;
  ops::batch_norm(x, Tensor<double>::full({1}, 1.0), Tensor<double>::zeros({1}),
                  std::span<const double>(rm), std::span<const double>(rv), true, 1e-5, &stats);
  EXPECT_DOUBLE_EQ(stats.mean[0], 3.0);
  EXPECT_DOUBLE_EQ(stats.unbiased_var[0], 7.0);
}

TEST(LossTest, ClosedForms) {
  auto half = Tensor<double>::full({2, 3}, 0.5);
  auto targets = Tensor<double>({2, 3}, {1, 0, 1, 0, 0, 1});
  EXPECT_NEAR(ops::binary_cross_entropy(half, targets).item(), std::log(2.0), 1e-12);
  auto p = Tensor<double>({1, 1}, {0.8});
  auto q = Tensor<double>({1, 1}, {0.2});
  EXPECT_NEAR(ops::symmetric_bernoulli_kl(p, q).item(), 0.6 * 2.0 * std::log(4.0), 1e-12);
  EXPECT_EQ(ops::symmetric_bernoulli_kl(p, q).item(), ops::symmetric_bernoulli_kl(q, p).item());
}
