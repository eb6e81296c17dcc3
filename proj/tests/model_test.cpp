// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sslaudio/error.hpp"
#include "sslaudio/gradcheck.hpp"
#include "sslaudio/model.hpp"

using namespace sslaudio;

namespace {

ModelConfig small_config(int blocks = 2, int d = 32) {
  ModelConfig c;
  c.num_blocks = blocks;
  c.embed_dim = d;
  c.latent_dim = d;
  c.num_heads = 4;
  c.ffn_dim = 4 * d;
  return c;
}

template <typename T>
Tensor<T> random_tensor(Shape shape, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<T> v(shape_size(shape));
  for (auto& x : v) x = static_cast<T>(normal(rng));
  return Tensor<T>(std::move(shape), std::move(v));
}

template <typename T>
void zero(ConformerModel<T>& model, const std::string& name) {
  auto v = model.param(name).mutable_values();
  std::fill(v.begin(), v.end(), T{0});
}

// Weighted readout so the loss is not invariant to per-row shifts.
template <typename T>
Tensor<T> readout(const Tensor<T>& x, unsigned seed) {
  return ops::sum(ops::mul(x, random_tensor<T>(x.shape(), seed)));
}

}  // namespace

TEST(ModelConfigTest, PresetsAndValidation) {
  auto s = ModelConfig::preset("cf_S");
  EXPECT_EQ(s.embed_dim, 256);
  EXPECT_EQ(s.num_heads, 8);
  auto l = ModelConfig::preset("cf_L");
  EXPECT_EQ(l.embed_dim, 768);
  EXPECT_EQ(l.num_heads, 12);
  for (const auto& c : {s, l}) {
    EXPECT_EQ(c.num_blocks, 12);
    EXPECT_EQ(c.ffn_dim, 1024);
    EXPECT_EQ(c.kernel_first, 31);
    EXPECT_EQ(c.kernel_rest, 15);
    EXPECT_EQ(c.stack_factor, 4);
    EXPECT_DOUBLE_EQ(c.dropout, 0.1);
  }
  EXPECT_THROW(ModelConfig::preset("cf_M"), ConfigError);
  auto bad = s;
  bad.num_heads = 7;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.kernel_rest = 14;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.stack_factor = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ParamCountTest, PresetsNearPublishedTotals) {
  const double small = static_cast<double>(param_count(ModelConfig::cf_s()));
  const double large = static_cast<double>(param_count(ModelConfig::cf_l()));
  EXPECT_NEAR(small / 18.4e6, 1.0, 0.05) << small;
  EXPECT_NEAR(large / 88.1e6, 1.0, 0.05) << large;
}

TEST(ParamCountTest, MoreBlocksMoreParameters) {
  auto c = ModelConfig::cf_s();
  const auto base = param_count(c);
  c.num_blocks *= 2;
  EXPECT_GT(param_count(c), base);
}

TEST(ParamCountTest, MatchesInstantiatedModel) {
  auto c = small_config();
  ConformerModel<float> model(c, 1);
  EXPECT_EQ(model.num_trainable(), param_count(c));
  EXPECT_FALSE(model.has_param("blocks.0.mhsa.k.bias"));
  EXPECT_FALSE(model.has_param("blocks.0.conv.dw.bias"));
  EXPECT_EQ(model.param("blocks.0.conv.dw.weight").dim(2), 31u);
  EXPECT_EQ(model.param("blocks.1.conv.dw.weight").dim(2), 15u);
  EXPECT_EQ(model.buffers().size(), 4u);
}

TEST(TimeStackTest, FiveHundredFramesStackToQuarterLength) {
  auto x = random_tensor<float>({500, 64}, 1);
  auto y = time_stack(x, 4, 500);
  ASSERT_EQ(y.shape(), (Shape{125, 256}));
  for (std::size_t t : {0u, 17u, 124u}) {
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t b = 0; b < 64; ++b) {
        EXPECT_EQ(y.at(t, j * 64 + b), x.at(4 * t + j, b));
      }
    }
  }
}

TEST(TimeStackTest, RemainderDroppedPerSequence) {
  auto x = random_tensor<double>({14, 3}, 2);  // two sequences of 7
  auto y = time_stack(x, 4, 7);
  ASSERT_EQ(y.shape(), (Shape{2, 12}));
  for (std::size_t j = 0; j < 12; ++j) {
    EXPECT_EQ(y.at(0, j), x.at(j / 3, j % 3));
    EXPECT_EQ(y.at(1, j), x.at(7 + j / 3, j % 3));
  }
}

TEST(TimeStackTest, IdentityAndErrors) {
  auto x = random_tensor<float>({5, 64}, 3);
  auto y = time_stack(x, 1, 5);
  EXPECT_EQ(std::vector<float>(y.values().begin(), y.values().end()),
            std::vector<float>(x.values().begin(), x.values().end()));
  EXPECT_THROW(time_stack(random_tensor<float>({3, 64}, 4), 4, 3), InputError);
}

TEST(FeatureEncodeTest, IdentityWeightsReproduceStackedInput) {
  auto c = small_config(0);
  c.latent_dim = 256;
  c.embed_dim = 256;
  ConformerModel<double> model(c, 5);
  auto w = model.param("feature.weight").mutable_values();
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < 256; ++i) w[i * 256 + i] = 1.0;
  zero(model, "feature.bias");
  auto x = random_tensor<double>({40, 64}, 6);
  auto latent = model.feature_encode(x, 40);
  ASSERT_EQ(latent.z.shape(), (Shape{10, 256}));
  EXPECT_EQ(latent.seq_len, 10u);
  EXPECT_EQ(latent.mask, std::vector<bool>(10, false));
  auto stacked = time_stack(x, 4, 40);
  for (std::size_t i = 0; i < stacked.size(); ++i) {
    EXPECT_EQ(latent.z.values()[i], stacked.values()[i]);
  }
}

TEST(FeatureEncodeTest, ShapeForOddLengths) {
  ConformerModel<float> model(small_config(0), 7);
  for (std::size_t t : {4u, 9u, 23u}) {
    auto latent = model.feature_encode(random_tensor<float>({2 * t, 64}, 8), t);
    EXPECT_EQ(latent.z.shape(), (Shape{2 * (t / 4), 32}));
  }
}

TEST(FeatureEncodeTest, WeightGradientMatchesFiniteDifferences) {
  ConformerModel<double> model(small_config(0), 9);
  auto x = random_tensor<double>({24, 64}, 10);
  auto loss = [&] { return readout(model.feature_encode(x, 12).z, 11); };
  auto r = grad_check_leaves<double>(
      loss, {model.param("feature.weight"), model.param("feature.bias")}, 1e-4,
      Stencil::kTwoPoint, 200, 1);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(SampleMaskTest, CoverageWithinBound) {
  auto rng = ops::Rng(12);
  for (int i = 0; i < 200; ++i) {
    auto m = sample_mask(125, 0.30, 10, rng);
    const double cover = static_cast<double>(std::count(m.begin(), m.end(), true)) / 125.0;
    EXPECT_GE(cover, 0.30);
    EXPECT_LE(cover, 0.30 + 10.0 / 125.0);
  }
}

TEST(SampleMaskTest, MeanCoverageOverThousandDraws) {
  auto rng = ops::Rng(13);
  double total = 0;
  for (int i = 0; i < 1000; ++i) {
    auto m = sample_mask(125, 0.30, 10, rng);
    total += static_cast<double>(std::count(m.begin(), m.end(), true)) / 125.0;
  }
  const double mean = total / 1000.0;
  EXPECT_GE(mean, 0.30);
  EXPECT_LE(mean, 0.34);
}

TEST(SampleMaskTest, MasksAreContiguousSpans) {
  auto rng = ops::Rng(14);
  auto m = sample_mask(200, 0.3, 10, rng);
  // Every run of masked frames is at least one span long.
  std::size_t run = 0;
  for (std::size_t i = 0; i <= m.size(); ++i) {
    if (i < m.size() && m[i]) {
      ++run;
    } else {
      if (run > 0) {
        EXPECT_GE(run, 10u);
      }
      run = 0;
    }
  }
}

TEST(SampleMaskTest, MinimalAndErrors) {
  auto rng = ops::Rng(15);
  auto m = sample_mask(125, 1.0 / 125.0, 1, rng);
  EXPECT_EQ(std::count(m.begin(), m.end(), true), 1);
  EXPECT_THROW(sample_mask(5, 0.3, 10, rng), ConfigError);
  EXPECT_THROW(sample_mask(50, 0.0, 10, rng), ConfigError);
}

TEST(ApplyMaskTest, NoOpSaturationAndInputUntouched) {
  auto z = random_tensor<float>({6, 4}, 16);
  auto emb = random_tensor<float>({1, 4}, 17);
  auto same = apply_mask(z, std::vector<bool>(6, false), emb);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(same.values()[i], z.values()[i]);
  auto all = apply_mask(z, std::vector<bool>(6, true), emb);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(all.at(r, c), emb.at(0, c));
  }
  auto before = std::vector<float>(z.values().begin(), z.values().end());
  apply_mask(z, {true, false, true, false, false, true}, emb);
  EXPECT_EQ(before, std::vector<float>(z.values().begin(), z.values().end()));
  EXPECT_THROW(apply_mask(z, std::vector<bool>(5, true), emb), ContractError);
}

TEST(ApplyMaskTest, EmbeddingGradientCountsMaskedRows) {
  auto z = random_tensor<double>({8, 3}, 18);
  auto emb = random_tensor<double>({1, 3}, 19).clone(true);
  std::vector<bool> mask{true, false, true, true, false, false, true, false};
  Graph<double> graph;
  {
    GraphScope<double> scope(graph);
    backward(graph, ops::sum(apply_mask(z, mask, emb)));
  }
  for (double g : emb.grad()) EXPECT_DOUBLE_EQ(g, 4.0);
  auto r = grad_check<double>([&](const Tensor<double>& e) { return readout(apply_mask(z, mask, e), 20); },
                              emb, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-8);
}

TEST(SelfAttentionTest, ConstantQueriesAndKeysAverageValues) {
  ConformerModel<double> model(small_config(1), 21);
  zero(model, "blocks.0.mhsa.q.weight");
  zero(model, "blocks.0.mhsa.k.weight");
  auto x = random_tensor<double>({5, 32}, 22);
  ForwardContext<double> ctx;
  ctx.seq_len = 5;
  auto y = model.self_attention(0, x, ctx);
  // Uniform weights: every row is out(mean of value rows).
  auto v = ops::linear(x, model.param("blocks.0.mhsa.v.weight"), model.param("blocks.0.mhsa.v.bias"));
  auto expected = ops::linear(ops::segment_mean(v, 5), model.param("blocks.0.mhsa.out.weight"),
                              model.param("blocks.0.mhsa.out.bias"));
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 32; ++c) EXPECT_NEAR(y.at(r, c), expected.at(0, c), 1e-12);
  }
}

TEST(SelfAttentionTest, SingletonSequenceReturnsProjectedValue) {
  ConformerModel<double> model(small_config(1), 23);
  auto x = random_tensor<double>({3, 32}, 24);  // three sequences of length 1
  ForwardContext<double> ctx;
  ctx.seq_len = 1;
  auto y = model.self_attention(0, x, ctx);
  auto v = ops::linear(x, model.param("blocks.0.mhsa.v.weight"), model.param("blocks.0.mhsa.v.bias"));
  auto expected = ops::linear(v, model.param("blocks.0.mhsa.out.weight"),
                              model.param("blocks.0.mhsa.out.bias"));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.values()[i], expected.values()[i], 1e-12);
}

TEST(SelfAttentionTest, ScalingLogitInputsKeepsRowArgmax) {
  auto q = random_tensor<double>({7, 8}, 25);
  auto k = random_tensor<double>({7, 8}, 26);
  auto logits = ops::matmul_nt(q, k);
  for (double c : {0.1, 0.5, 3.0, 40.0}) {
    auto scaled = ops::matmul_nt(ops::scale(q, c), ops::scale(k, c));
    auto w0 = ops::softmax(logits);
    auto w1 = ops::softmax(scaled);
    double diff = 0;
    for (std::size_t r = 0; r < 7; ++r) {
      std::size_t a0 = 0, a1 = 0;
      for (std::size_t j = 1; j < 7; ++j) {
        if (logits.at(r, j) > logits.at(r, a0)) a0 = j;
        if (scaled.at(r, j) > scaled.at(r, a1)) a1 = j;
        diff = std::max(diff, std::abs(w0.at(r, j) - w1.at(r, j)));
      }
      EXPECT_EQ(a0, a1);
    }
    EXPECT_GT(diff, 1e-3);
  }
}

TEST(SelfAttentionTest, ProjectionGradientsMatchFiniteDifferences) {
  ConformerModel<double> model(small_config(1), 27);
  auto x = random_tensor<double>({12, 32}, 28);
  ForwardContext<double> ctx;
  ctx.seq_len = 6;
  auto loss = [&] { return readout(model.self_attention(0, x, ctx), 29); };
  std::vector<Tensor<double>> leaves;
  for (const char* n : {"q.weight", "q.bias", "k.weight", "v.weight", "v.bias", "out.weight",
                        "out.bias"}) {
    leaves.push_back(model.param(std::string("blocks.0.mhsa.") + n));
  }
  auto r = grad_check_leaves<double>(loss, leaves, 1e-4, Stencil::kFourPoint, 60, 2);
  EXPECT_LT(r.max_relative_error, 1e-5) << r.worst_leaf << ":" << r.worst_index;
}

TEST(ConformerBlockTest, ShapePreservingForAnyLength) {
  ConformerModel<float> model(small_config(2), 30);
  for (std::size_t t : {1u, 2u, 9u, 40u}) {
    ForwardContext<float> ctx;
    ctx.seq_len = t;
    auto x = random_tensor<float>({2 * t, 32}, 31);
    EXPECT_EQ(model.block_forward(0, x, ctx).shape(), x.shape());
    EXPECT_EQ(model.block_forward(1, x, ctx).shape(), x.shape());
  }
}

TEST(ConformerBlockTest, ZeroOutputWeightsLeaveFinalNorm) {
  ConformerModel<double> model(small_config(1), 32);
  for (const char* n : {"ff1.down.weight", "ff1.down.bias", "conv.pw2.weight", "conv.pw2.bias",
                        "mhsa.out.weight", "mhsa.out.bias", "ff2.down.weight", "ff2.down.bias"}) {
    zero(model, std::string("blocks.0.") + n);
  }
  auto gamma = model.param("blocks.0.final_norm.gamma").mutable_values();
  auto beta = model.param("blocks.0.final_norm.beta").mutable_values();
  for (std::size_t i = 0; i < 32; ++i) {
    gamma[i] = 1.0 + 0.01 * static_cast<double>(i);
    beta[i] = -0.02 * static_cast<double>(i);
  }
  auto x = random_tensor<double>({8, 32}, 33);
  ForwardContext<double> ctx;
  ctx.seq_len = 8;
  auto y = model.block_forward(0, x, ctx);
  auto expected = ops::layer_norm(x, model.param("blocks.0.final_norm.gamma"),
                                  model.param("blocks.0.final_norm.beta"));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.values()[i], expected.values()[i], 1e-12);
}

TEST(ConformerBlockTest, BatchNormUpdatesWaitForCommit) {
  ConformerModel<float> model(small_config(1), 34);
  ForwardContext<float> ctx;
  ctx.training = true;
  ctx.seq_len = 6;
  auto x = random_tensor<float>({12, 32}, 35);
  model.block_forward(0, x, ctx);
  const auto& rm = model.param("blocks.0.conv.bn.running_mean");
  for (float v : rm.values()) EXPECT_EQ(v, 0.0f);
  ASSERT_EQ(ctx.deferred_updates.size(), 1u);
  ctx.commit();
  double moved = 0;
  for (float v : rm.values()) moved += std::abs(v);
  EXPECT_GT(moved, 0.0);
  EXPECT_TRUE(ctx.deferred_updates.empty());
}

TEST(ConformerBlockTest, NonFiniteActivationNamesBlock) {
  ConformerModel<float> model(small_config(2), 36);
  auto w = model.param("blocks.1.ff1.up.weight").mutable_values();
  std::fill(w.begin(), w.end(), 3e38f);
  ForwardContext<float> ctx;
  ctx.seq_len = 4;
  auto x = random_tensor<float>({4, 32}, 37);
  try {
    model.context_encode(x, ctx);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("block 1"), std::string::npos) << e.what();
  }
}

TEST(ConformerBlockTest, SinglePrecisionBlockGradient) {
  const auto c = small_config(1);
  ConformerModel<float> mf(c, 38);
  ConformerModel<double> md(c, 38);
  md.copy_from(mf);
  auto xd = random_tensor<double>({4, 32}, 39);
  std::vector<float> xv(xd.values().begin(), xd.values().end());
  Tensor<float> xf({4, 32}, xv);
  for (std::size_t i = 0; i < xd.size(); ++i) xd.mutable_values()[i] = xf.values()[i];
  ForwardContext<float> cf;
  cf.training = true;
  cf.seq_len = 4;
  ForwardContext<double> cd;
  cd.training = true;
  cd.seq_len = 4;
  auto lf = [&] { return readout(mf.block_forward(0, xf, cf), 40); };
  auto ld = [&] { return readout(md.block_forward(0, xd, cd), 40); };
  std::vector<Tensor<float>> leaves_f{xf};
  std::vector<Tensor<double>> leaves_d{xd};
  for (const auto& [name, t] : mf.parameters()) {
    if (name.rfind("blocks.0.", 0) == 0) {
      leaves_f.push_back(t);
      leaves_d.push_back(md.param(name));
    }
  }
  auto r = grad_check_mixed(lf, leaves_f, ld, leaves_d, 1e-4, Stencil::kFourPoint, 16, 3);
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst_leaf << ":" << r.worst_index << " "
                                        << r.analytic << " vs " << r.numeric;
}

TEST(ContextEncodeTest, OutputShapeMatchesInput) {
  auto c = ModelConfig::cf_s();
  c.num_blocks = 1;
  ConformerModel<float> model(c, 41);
  ForwardContext<float> ctx;
  ctx.seq_len = 125;
  auto y = model.context_encode(random_tensor<float>({125, 256}, 42), ctx);
  EXPECT_EQ(y.shape(), (Shape{125, 256}));
}

TEST(ContextEncodeTest, NoBlocksComposesLinears) {
  ConformerModel<double> model(small_config(0), 43);
  auto z = random_tensor<double>({6, 32}, 44);
  ForwardContext<double> ctx;
  ctx.seq_len = 6;
  auto y = model.context_encode(z, ctx);
  auto expected = ops::linear(
      ops::linear(z, model.param("context.in.weight"), model.param("context.in.bias")),
      model.param("context.out.weight"), model.param("context.out.bias"));
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.values()[i], expected.values()[i], 1e-12);
}

TEST(ContextEncodeTest, DeterministicAcrossRuns) {
  auto run = [] {
    ConformerModel<float> model(small_config(2), 45);
    ForwardContext<float> ctx;
    ctx.training = true;
    ctx.seq_len = 10;
    auto rng = ops::Rng(46);
    ctx.dropout_rng = &rng;
    auto y = model.context_encode(random_tensor<float>({20, 32}, 47), ctx);
    return std::vector<float>(y.values().begin(), y.values().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(ContextEncodeTest, CopyFromConvertsPrecision) {
  ConformerModel<float> mf(small_config(1), 48);
  ConformerModel<double> md(small_config(1), 49);
  md.copy_from(mf);
  for (const auto& [name, t] : mf.parameters()) {
    const auto& d = md.param(name);
    for (std::size_t i = 0; i < t.size(); ++i) ASSERT_EQ(static_cast<double>(t.values()[i]), d.values()[i]);
  }
}
