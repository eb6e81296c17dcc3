// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "sslaudio/error.hpp"
#include "sslaudio/gradcheck.hpp"
#include "sslaudio/pretrain.hpp"

using namespace sslaudio;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<T> v(shape_size(shape));
  for (auto& x : v) x = static_cast<T>(normal(rng));
  return Tensor<T>(std::move(shape), std::move(v));
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

ModelConfig toy_model() {
  ModelConfig c;
  c.num_blocks = 1;
  c.embed_dim = 16;
  c.latent_dim = 16;
  c.num_heads = 2;
  c.ffn_dim = 32;
  c.mask_span = 3;
  return c;
}

}  // namespace

TEST(DistractorTest, ShrinksToAvailableSteps) {
  auto rng = ops::Rng(1);
  auto idx = iota(40);
  auto d = sample_distractors(idx, 7, 100, rng);
  EXPECT_EQ(d.size(), 39u);
  std::set<std::size_t> unique(d.begin(), d.end());
  EXPECT_EQ(unique.size(), 39u);
  EXPECT_EQ(unique.count(7), 0u);
}

TEST(DistractorTest, ExactlyKDistinct) {
  auto rng = ops::Rng(2);
  auto idx = iota(150);
  for (std::size_t t : {0u, 75u, 149u}) {
    auto d = sample_distractors(idx, t, 100, rng);
    std::set<std::size_t> unique(d.begin(), d.end());
    EXPECT_EQ(unique.size(), 100u);
    EXPECT_EQ(unique.count(t), 0u);
    for (auto i : d) EXPECT_LT(i, 150u);
  }
}

TEST(DistractorTest, DegenerateCasesAndErrors) {
  auto rng = ops::Rng(3);
  auto idx = iota(10);
  EXPECT_TRUE(sample_distractors(idx, 3, 0, rng).empty());
  std::vector<std::size_t> single{4};
  EXPECT_TRUE(sample_distractors(single, 4, 100, rng).empty());
  EXPECT_THROW(sample_distractors(idx, 42, 5, rng), ContractError);
}

TEST(DistractorTest, UniformOverOthers) {
  auto rng = ops::Rng(4);
  std::vector<std::size_t> idx{2, 5, 9, 11, 20};
  std::map<std::size_t, int> counts;
  for (int i = 0; i < 20000; ++i) {
    for (auto d : sample_distractors(idx, 9, 2, rng)) ++counts[d];
  }
  EXPECT_EQ(counts.count(9), 0u);
  for (std::size_t v : {2u, 5u, 11u, 20u}) EXPECT_NEAR(counts[v] / 20000.0, 0.5, 0.02) << v;
}

TEST(ContrastiveLossTest, IdenticalCandidatesGiveLogOfCount) {
  auto z = random_tensor<double>({1, 8}, 5);
  std::vector<std::size_t> cand(101, 0);
  auto loss = candidate_contrastive_loss(z, z, cand, 101);
  EXPECT_NEAR(loss.item(), std::log(101.0), 1e-6);
  EXPECT_NEAR(loss.item(), 4.61512, 1e-5);
}

TEST(ContrastiveLossTest, OppositeDistractorsClosedForm) {
  auto z = random_tensor<double>({1, 8}, 6);
  auto neg = ops::scale(z, -2.5);
  std::vector<Tensor<double>> parts{z, neg};
  auto latents = ops::concat<double>(parts, 0);
  std::vector<std::size_t> cand(101, 1);
  cand[0] = 0;
  auto loss = candidate_contrastive_loss(z, latents, cand, 101);
  EXPECT_NEAR(loss.item(), std::log(1.0 + 100.0 * std::exp(-2.0)), 1e-9);
  EXPECT_NEAR(loss.item(), 2.6765, 1e-4);
}

TEST(ContrastiveLossTest, SingleCandidateIsZero) {
  auto c = random_tensor<double>({3, 4}, 7);
  auto z = random_tensor<double>({3, 4}, 8);
  std::vector<std::size_t> cand{0, 1, 2};
  EXPECT_EQ(candidate_contrastive_loss(c, z, cand, 1).item(), 0.0);
  // A clip with one masked step has no distractors.
  auto rng = ops::Rng(9);
  std::vector<bool> mask{false, true, false};
  EXPECT_EQ(contrastive_loss(c, z, mask, 3, 100, rng).item(), 0.0);
}

TEST(ContrastiveLossTest, InvariantToPositiveRescaling) {
  auto c = random_tensor<double>({4, 6}, 10);
  auto z = random_tensor<double>({9, 6}, 11);
  std::vector<std::size_t> cand{0, 3, 5, 1, 2, 8, 2, 7, 0, 3, 4, 6};
  const double base = candidate_contrastive_loss(c, z, cand, 3).item();
  for (double s : {0.01, 3.0, 1e3}) {
    const double scaled = candidate_contrastive_loss(ops::scale(c, s), ops::scale(z, 1.7 * s),
                                                     cand, 3).item();
    EXPECT_NEAR(scaled, base, 1e-6);
  }
}

TEST(ContrastiveLossTest, DecreasingInTargetSimilarity) {
  // Anchor e0; target rotates toward the anchor, distractors fixed.
  Tensor<double> c({1, 3}, {1, 0, 0});
  double previous = 1e9;
  for (double angle = 3.0; angle >= 0.0; angle -= 0.25) {
    Tensor<double> z({3, 3}, {std::cos(angle), std::sin(angle), 0, 0, 1, 0, 0.3, 0, 1});
    std::vector<std::size_t> cand{0, 1, 2};
    const double loss = candidate_contrastive_loss(c, z, cand, 3).item();
    EXPECT_LT(loss, previous);
    previous = loss;
  }
}

TEST(ContrastiveLossTest, TargetIsAlwaysACandidate) {
  // With C == Z and a sharp temperature, the target column dominates, which
  // only happens if it is present in every candidate row.
  auto z = random_tensor<double>({30, 16}, 12);
  std::vector<bool> mask(30, false);
  for (std::size_t i = 3; i < 30; i += 2) mask[i] = true;
  auto rng = ops::Rng(13);
  EXPECT_LT(contrastive_loss(z, z, mask, 30, 100, rng, 0.01).item(), 1e-3);
}

TEST(ContrastiveLossTest, AveragesClipsAndRejectsMismatch) {
  auto c = random_tensor<double>({8, 4}, 14);
  auto z = random_tensor<double>({8, 4}, 15);
  std::vector<bool> mask{true, true, false, false, true, false, true, false};
  auto rng_a = ops::Rng(16);
  const double both = contrastive_loss(c, z, mask, 4, 1, rng_a).item();
  // Two masked steps per clip and K=1: each step's only distractor is the other.
  std::vector<std::size_t> cand{0, 1, 1, 0};
  auto clip = [&](std::vector<std::size_t> rows) {
    return candidate_contrastive_loss(ops::gather_rows(c, std::span<const std::size_t>(rows)),
                                      ops::gather_rows(z, std::span<const std::size_t>(rows)),
                                      cand, 2).item();
  };
  EXPECT_NEAR(both, 0.5 * (clip({0, 1}) + clip({4, 6})), 1e-12);
  auto rng_b = ops::Rng(17);
  EXPECT_THROW(contrastive_loss(c, z, std::vector<bool>(7, true), 4, 1, rng_b), ContractError);
  EXPECT_THROW(contrastive_loss(c, z, std::vector<bool>(8, false), 4, 1, rng_b), ContractError);
}

TEST(ContrastiveLossTest, GradientFlowsIntoContextAndLatents) {
  auto c = random_tensor<double>({10, 5}, 18);
  auto z = random_tensor<double>({10, 5}, 19);
  std::vector<bool> mask{true, false, true, true, false, true, true, true, false, true};
  auto loss_c = [&](const Tensor<double>& x) {
    auto rng = ops::Rng(20);
    return contrastive_loss(x, z, mask, 5, 3, rng);
  };
  auto loss_z = [&](const Tensor<double>& x) {
    auto rng = ops::Rng(20);
    return contrastive_loss(c, x, mask, 5, 3, rng);
  };
  EXPECT_LT(grad_check<double>(loss_c, c, 1e-5, Stencil::kFourPoint).max_relative_error, 1e-7);
  EXPECT_LT(grad_check<double>(loss_z, z, 1e-5, Stencil::kFourPoint).max_relative_error, 1e-7);
}

TEST(PretrainLrTest, ScheduleValues) {
  PretrainConfig cfg;
  EXPECT_EQ(pretrain_lr(0, cfg), 0.0);
  EXPECT_NEAR(pretrain_lr(5000, cfg), 1.5e-4, 1e-18);
  EXPECT_EQ(pretrain_lr(10000, cfg), 3e-4);
  EXPECT_NEAR(pretrain_lr(155000, cfg), 1.5e-4, 1e-12);
  EXPECT_EQ(pretrain_lr(300000, cfg), 0.0);
  EXPECT_EQ(pretrain_lr(400000, cfg), 0.0);
}

TEST(PretrainLrTest, PeakOnlyAtWarmupEndAndContinuous) {
  PretrainConfig cfg;
  cfg.warmup_steps = 100;
  cfg.total_steps = 1000;
  double best = 0;
  std::int64_t argbest = -1;
  for (std::int64_t s = 0; s <= 1100; ++s) {
    const double lr = pretrain_lr(s, cfg);
    if (lr > best) {
      best = lr;
      argbest = s;
    }
    if (s > 0) {
      EXPECT_LE(std::abs(lr - pretrain_lr(s - 1, cfg)), cfg.peak_lr / 100.0 + 1e-15);
    }
  }
  EXPECT_EQ(best, cfg.peak_lr);
  EXPECT_EQ(argbest, 100);
}

TEST(PretrainConfigTest, Validation) {
  PretrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.warmup_steps = cfg.total_steps;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = PretrainConfig{};
  cfg.mask_rate = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = PretrainConfig{};
  cfg.num_distractors = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  Tensor<double> p({3}, {1.0, -2.0, 0.5}, true);
  p.accumulate_grad(std::vector<double>{1.0, 1.0, 1.0});
  OptimizerState<double> state;
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  adam_update<double>({{"p", p}}, state, 1e-3, cfg);
  EXPECT_NEAR(p.values()[0], 1.0 - 1e-3, 1e-10);
  EXPECT_NEAR(p.values()[1], -2.0 - 1e-3, 1e-10);
  EXPECT_EQ(state.step, 1);
}

TEST(AdamTest, ZeroLearningRateOnlyUpdatesMoments) {
  Tensor<double> p({2}, {1.0, 2.0}, true);
  p.accumulate_grad(std::vector<double>{0.5, -0.5});
  OptimizerState<double> state;
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  adam_update<double>({{"p", p}}, state, 0.0, cfg);
  EXPECT_EQ(p.values()[0], 1.0);
  EXPECT_EQ(p.values()[1], 2.0);
  EXPECT_NEAR(state.first_moment["p"][0], 0.05, 1e-15);
  EXPECT_NEAR(state.second_moment["p"][1], 0.02 * 0.25, 1e-15);
}

TEST(AdamTest, DecayOnlyStepShrinksParameters) {
  Tensor<double> p({2}, {1.0, -4.0}, true);
  OptimizerState<double> state;
  AdamConfig cfg;
  cfg.weight_decay = 0.01;
  adam_update<double>({{"p", p}}, state, 1e-3, cfg);
  EXPECT_DOUBLE_EQ(p.values()[0], 1.0 * (1.0 - 1e-5));
  EXPECT_DOUBLE_EQ(p.values()[1], -4.0 * (1.0 - 1e-5));
}

TEST(AdamTest, NonFiniteGradientAbortsBeforeUpdate) {
  Tensor<double> a({2}, {1.0, 2.0}, true);
  Tensor<double> b({1}, {3.0}, true);
  a.accumulate_grad(std::vector<double>{0.1, 0.2});
  b.accumulate_grad(std::vector<double>{std::nan("")});
  OptimizerState<double> state;
  EXPECT_THROW(adam_update<double>({{"a", a}, {"b", b}}, state, 1e-3, AdamConfig{}),
               NumericError);
  EXPECT_EQ(a.values()[0], 1.0);
  EXPECT_EQ(state.step, 0);
  EXPECT_TRUE(state.first_moment.empty());
}

TEST(AdamTest, ClippingBoundsEffectiveGradient) {
  Tensor<double> p({2}, {0.0, 0.0}, true);
  p.accumulate_grad(std::vector<double>{30.0, 40.0});
  OptimizerState<double> state;
  AdamConfig cfg;
  cfg.max_grad_norm = 1.0;
  cfg.weight_decay = 0.0;
  const double norm = adam_update<double>({{"p", p}}, state, 1e-3, cfg);
  EXPECT_DOUBLE_EQ(norm, 50.0);
  EXPECT_NEAR(state.first_moment["p"][0], 0.1 * 0.6, 1e-15);
}

TEST(PretrainStepTest, InitialLossNearUniformBaseline) {
  ConformerModel<float> model(toy_model(), 21);
  OptimizerState<float> state;
  PretrainConfig cfg;
  cfg.num_distractors = 100;
  cfg.warmup_steps = 10;
  cfg.total_steps = 100;
  cfg.seed = 22;
  auto x = random_tensor<float>({2 * 200, 64}, 23);
  auto stats = pretrain_step(x, 200, model, state, cfg, 0);
  // 50 latent frames, ~15 masked: K' + 1 = number of masked steps.
  const double k_plus_one = std::round(stats.masked_fraction * 50.0);
  EXPECT_NEAR(stats.loss, std::log(k_plus_one), 0.5);
  EXPECT_GT(stats.grad_norm, 0.0);
  EXPECT_DOUBLE_EQ(stats.lr, pretrain_lr(1, cfg));
  EXPECT_EQ(state.step, 1);
}

TEST(PretrainStepTest, SeededRunsAreIdentical) {
  auto run = [] {
    ConformerModel<float> model(toy_model(), 24);
    OptimizerState<float> state;
    PretrainConfig cfg;
    cfg.warmup_steps = 2;
    cfg.total_steps = 10;
    cfg.peak_lr = 1e-3;
    cfg.seed = 25;
    auto x = random_tensor<float>({2 * 80, 64}, 26);
    std::vector<double> losses;
    for (int s = 0; s < 4; ++s) losses.push_back(pretrain_step(x, 80, model, state, cfg, s).loss);
    return losses;
  };
  EXPECT_EQ(run(), run());
}

TEST(PretrainStepTest, LossDecreasesOnFixedBatch) {
  ConformerModel<float> model(toy_model(), 27);
  OptimizerState<float> state;
  PretrainConfig cfg;
  cfg.warmup_steps = 5;
  cfg.total_steps = 1000;
  cfg.peak_lr = 2e-3;
  cfg.seed = 28;
  auto x = random_tensor<float>({2 * 120, 64}, 29);
  double first = 0, last = 0;
  for (int s = 0; s < 60; ++s) {
    const double l = pretrain_step(x, 120, model, state, cfg, s).loss;
    if (s < 5) first += l;
    if (s >= 55) last += l;
  }
  EXPECT_LT(last, first);
}

TEST(PretrainStepTest, FailedStepLeavesModelUntouched) {
  ConformerModel<float> model(toy_model(), 30);
  OptimizerState<float> state;
  PretrainConfig cfg;
  cfg.warmup_steps = 1;
  cfg.total_steps = 10;
  auto x = random_tensor<float>({60, 64}, 31);
  x.mutable_values()[7] = std::numeric_limits<float>::infinity();
  const auto before = model.param("feature.weight").values()[0];
  const auto rm = model.param("blocks.0.conv.bn.running_mean").values()[0];
  EXPECT_THROW(pretrain_step(x, 60, model, state, cfg, 0), NumericError);
  EXPECT_EQ(model.param("feature.weight").values()[0], before);
  EXPECT_EQ(model.param("blocks.0.conv.bn.running_mean").values()[0], rm);
  EXPECT_EQ(state.step, 0);
  for (const auto& [name, p] : model.parameters()) EXPECT_FALSE(p.has_grad()) << name;
}
