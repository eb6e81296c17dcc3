// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/gradsuite.hpp"

#include <functional>
#include <random>

#include "sslaudio/gradcheck.hpp"
#include "sslaudio/model.hpp"
#include "sslaudio/ops.hpp"
#include "sslaudio/pretrain.hpp"

namespace sslaudio {
namespace {

template <typename T>
using Leaves = std::vector<Tensor<T>>;

enum class LeafKind { kNormal, kProbability };

struct LeafSpec {
  Shape shape;
  LeafKind kind = LeafKind::kNormal;
};

struct SuiteCase {
  std::string name;
  std::vector<LeafSpec> leaves;
  std::function<Tensor<float>(const Leaves<float>&)> loss_f;
  std::function<Tensor<double>(const Leaves<double>&)> loss_d;
};

template <typename F>
SuiteCase make_case(std::string name, std::vector<LeafSpec> leaves, F f) {
  return {std::move(name), std::move(leaves), [f](const Leaves<float>& l) { return f(l); },
          [f](const Leaves<double>& l) { return f(l); }};
}

// Fixed random weighting so every output entry reaches the scalar loss.
template <typename T>
Tensor<T> project(const Tensor<T>& y) {
  std::mt19937_64 rng(0x5eed + y.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<T> w(y.size());
  for (auto& v : w) v = static_cast<T>(normal(rng));
  return ops::sum(ops::mul(y, Tensor<T>(y.shape(), std::move(w))));
}

// Values are rounded to float so both precisions see identical inputs.
std::vector<double> leaf_values(const LeafSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> prob(0.1, 0.9);
  std::vector<double> v(shape_size(spec.shape));
  for (auto& x : v) {
    x = static_cast<float>(spec.kind == LeafKind::kNormal ? normal(rng) : prob(rng));
  }
  return v;
}

template <typename T>
Leaves<T> to_leaves(const std::vector<LeafSpec>& specs, const std::vector<std::vector<double>>& values) {
  Leaves<T> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    out.emplace_back(specs[i].shape, std::vector<T>(values[i].begin(), values[i].end()), true);
  }
  return out;
}

std::vector<SuiteCase> primitive_cases() {
  using ops::Padding;
  const LeafSpec p23{{2, 3}, LeafKind::kProbability};
  std::vector<SuiteCase> cases;
  cases.push_back(make_case("matmul", {{{3, 4}}, {{4, 5}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::matmul(l[0], l[1])); }));
  cases.push_back(make_case("matmul_nt", {{{3, 4}}, {{5, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::matmul_nt(l[0], l[1])); }));
  cases.push_back(make_case("transpose", {{{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::transpose(l[0])); }));
  cases.push_back(make_case("reshape", {{{3, 4}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::reshape(l[0], Shape{2, 6}));
  }));
  cases.push_back(make_case("concat_rows", {{{2, 3}}, {{3, 3}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::concat<T>(l, 0));
  }));
  cases.push_back(make_case("concat_cols", {{{3, 2}}, {{3, 4}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::concat<T>(l, 1));
  }));
  cases.push_back(make_case("slice_rows", {{{5, 3}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::slice_rows(l[0], 1, 4)); }));
  cases.push_back(make_case("gather_rows", {{{4, 3}}}, []<typename T>(const Leaves<T>& l) {
    const std::vector<std::size_t> rows{2, 0, 2, 3};
    return project(ops::gather_rows(l[0], std::span<const std::size_t>(rows)));
  }));
  cases.push_back(make_case("take_along_rows", {{{3, 5}}}, []<typename T>(const Leaves<T>& l) {
    const std::vector<std::size_t> index{4, 0, 1, 1, 3, 2};
    return project(ops::take_along_rows(l[0], std::span<const std::size_t>(index), 2));
  }));
  cases.push_back(make_case("add", {{{3, 4}}, {{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::add(l[0], l[1])); }));
  cases.push_back(make_case("sub", {{{3, 4}}, {{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::sub(l[0], l[1])); }));
  cases.push_back(make_case("mul", {{{3, 4}}, {{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::mul(l[0], l[1])); }));
  cases.push_back(make_case("add_bias", {{{3, 4}}, {{4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::add_bias(l[0], l[1])); }));
  cases.push_back(make_case("scale", {{{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::scale(l[0], 0.7)); }));
  cases.push_back(make_case("linear", {{{3, 4}}, {{4, 2}}, {{2}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::linear(l[0], l[1], l[2]));
  }));
  cases.push_back(make_case("sum", {{{3, 4}}}, []<typename T>(const Leaves<T>& l) {
    return ops::scale(ops::sum(ops::mul(l[0], l[0])), 0.5);
  }));
  cases.push_back(make_case("mean", {{{3, 4}}}, []<typename T>(const Leaves<T>& l) {
    return ops::mean(ops::mul(l[0], l[0]));
  }));
  cases.push_back(make_case("segment_mean", {{{6, 3}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::segment_mean(l[0], 3)); }));
  cases.push_back(make_case("layer_norm", {{{3, 5}}, {{5}}, {{5}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::layer_norm(l[0], l[1], l[2]));
  }));
  cases.push_back(make_case("batch_norm", {{{6, 3}}, {{3}}, {{3}}}, []<typename T>(const Leaves<T>& l) {
    const std::vector<T> rm(3, T{0}), rv(3, T{1});
    return project(ops::batch_norm(l[0], l[1], l[2], std::span<const T>(rm),
                                   std::span<const T>(rv), true));
  }));
  cases.push_back(make_case("row_normalize", {{{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::row_normalize(l[0])); }));
  cases.push_back(make_case("softmax", {{{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::softmax(l[0])); }));
  cases.push_back(make_case("log_softmax", {{{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::log_softmax(l[0])); }));
  cases.push_back(make_case("sigmoid", {{{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::sigmoid(l[0])); }));
  cases.push_back(make_case("swish", {{{3, 4}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::swish(l[0])); }));
  cases.push_back(make_case("glu", {{{3, 6}}},
                            []<typename T>(const Leaves<T>& l) { return project(ops::glu(l[0])); }));
  cases.push_back(make_case("dropout", {{{3, 4}}}, []<typename T>(const Leaves<T>& l) {
    ops::Rng rng(11);
    return project(ops::dropout(l[0], 0.3, rng, true));
  }));
  cases.push_back(make_case("conv1d_same", {{{10, 3}}, {{4, 3, 3}}, {{4}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::conv1d(l[0], l[1], l[2], 1, Padding::kSame, 5));
  }));
  cases.push_back(make_case("conv1d_valid", {{{10, 3}}, {{2, 3, 2}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::conv1d(l[0], l[1], Tensor<T>(), 1, Padding::kValid, 5));
  }));
  cases.push_back(make_case("conv1d_depthwise", {{{10, 4}}, {{4, 1, 3}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::conv1d(l[0], l[1], Tensor<T>(), 4, Padding::kSame, 5));
  }));
  cases.push_back(make_case("attention", {{{8, 4}}, {{8, 4}}, {{8, 4}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::attention(l[0], l[1], l[2], 2, 4));
  }));
  cases.push_back(make_case("mask_rows", {{{4, 3}}, {{1, 3}}}, []<typename T>(const Leaves<T>& l) {
    return project(ops::mask_rows(l[0], {false, true, false, true}, l[1]));
  }));
  cases.push_back(make_case("linear_softmax_pool", {{{6, 2}, LeafKind::kProbability}},
                            []<typename T>(const Leaves<T>& l) {
                              return project(ops::linear_softmax_pool(l[0], 3));
                            }));
  cases.push_back(make_case("binary_cross_entropy", {p23}, []<typename T>(const Leaves<T>& l) {
    return ops::binary_cross_entropy(l[0], Tensor<T>({2, 3}, {1, 0, 0, 1, 1, 0}));
  }));
  cases.push_back(make_case("symmetric_bernoulli_kl", {p23, p23}, []<typename T>(const Leaves<T>& l) {
    return ops::symmetric_bernoulli_kl(l[0], l[1]);
  }));
  return cases;
}

GradSuiteRow make_row(const std::string& name, const char* precision, const GradCheckResult& r,
                      double threshold) {
  return {name, precision, r.max_relative_error, threshold, r.coordinates,
          r.max_relative_error < threshold};
}

void run_primitive(const SuiteCase& c, const GradSuiteOptions& o, std::uint64_t index,
                   std::vector<GradSuiteRow>& rows) {
  std::mt19937_64 rng(o.seed * 1000003 + index);
  std::vector<std::vector<double>> values;
  for (const auto& spec : c.leaves) values.push_back(leaf_values(spec, rng));
  auto lf = to_leaves<float>(c.leaves, values);
  auto ld = to_leaves<double>(c.leaves, values);
  auto single = grad_check_mixed([&] { return c.loss_f(lf); }, lf, [&] { return c.loss_d(ld); }, ld,
                                 1e-4, Stencil::kFourPoint, o.points_per_leaf, o.seed + index);
  rows.push_back(make_row(c.name, "float32", single, o.float_threshold));
  auto dd = to_leaves<double>(c.leaves, values);
  auto dbl = grad_check_leaves<double>([&] { return c.loss_d(dd); }, dd, 1e-4, Stencil::kFourPoint,
                                       o.points_per_leaf, o.seed + index);
  rows.push_back(make_row(c.name, "float64", dbl, o.double_threshold));
}

ModelConfig suite_config(int blocks) {
  ModelConfig c;
  c.num_blocks = blocks;
  c.embed_dim = 32;
  c.latent_dim = 32;
  c.num_heads = 4;
  c.ffn_dim = 64;
  c.kernel_first = 3;
  c.kernel_rest = 3;
  c.dropout = 0.0;
  return c;
}

template <typename T>
Tensor<T> input_from(const std::vector<float>& v, Shape shape) {
  return Tensor<T>(std::move(shape), std::vector<T>(v.begin(), v.end()));
}

std::vector<float> normal_floats(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

template <typename T>
Tensor<T> block_loss(const ConformerModel<T>& model, const Tensor<T>& x) {
  ForwardContext<T> ctx;
  ctx.training = true;
  ctx.seq_len = 4;
  return project(model.block_forward(0, x, ctx));
}

template <typename T>
Tensor<T> end_to_end_loss(const ConformerModel<T>& model, const Tensor<T>& logmel,
                          const std::vector<bool>& mask) {
  auto latent = model.feature_encode(logmel, 24);
  ForwardContext<T> ctx;
  ctx.training = true;
  ctx.seq_len = latent.seq_len;
  auto context = model.context_encode(apply_mask(latent.z, mask, model.mask_embedding()), ctx);
  ops::Rng rng(7);
  return contrastive_loss(context, latent.z, mask, latent.seq_len, 100, rng);
}

template <typename F>
void run_model_case(const std::string& name, int blocks, const std::string& prefix,
                    const GradSuiteOptions& o, std::uint64_t index, F loss,
                    std::vector<GradSuiteRow>& rows) {
  ConformerModel<float> mf(suite_config(blocks), o.seed + index);
  ConformerModel<double> md(suite_config(blocks), o.seed + index);
  md.copy_from(mf);
  Leaves<float> lf;
  Leaves<double> ld;
  for (const auto& [pname, t] : mf.parameters()) {
    if (pname.rfind(prefix, 0) == 0) {
      lf.push_back(t);
      ld.push_back(md.param(pname));
    }
  }
  auto single = grad_check_mixed([&] { return loss(mf); }, lf, [&] { return loss(md); }, ld, 1e-4,
                                 Stencil::kFourPoint, o.points_per_leaf, o.seed + index);
  rows.push_back(make_row(name, "float32", single, o.float_threshold));
  auto dbl = grad_check_leaves<double>([&] { return loss(md); }, ld, 1e-4, Stencil::kFourPoint,
                                       o.points_per_leaf, o.seed + index);
  rows.push_back(make_row(name, "float64", dbl, o.double_threshold));
}

}  // namespace

std::vector<GradSuiteRow> run_gradient_suite(const GradSuiteOptions& o) {
  std::vector<GradSuiteRow> rows;
  std::uint64_t index = 0;
  if (o.primitives) {
    for (const auto& c : primitive_cases()) run_primitive(c, o, index++, rows);
  }
  if (o.block) {
    const auto x = normal_floats(8 * 32, o.seed + 500);
    const auto xf = input_from<float>(x, {8, 32});
    const auto xd = input_from<double>(x, {8, 32});
    run_model_case("conformer_block_d32", 1, "blocks.0.", o, 501,
                   [&]<typename T>(const ConformerModel<T>& m) {
                     if constexpr (std::is_same_v<T, float>) {
                       return block_loss(m, xf);
                     } else {
                       return block_loss(m, xd);
                     }
                   },
                   rows);
  }
  if (o.end_to_end) {
    const auto x = normal_floats(48 * 64, o.seed + 600);
    const auto xf = input_from<float>(x, {48, 64});
    const auto xd = input_from<double>(x, {48, 64});
    // Two clips of T' = 6, three masked steps each.
    const std::vector<bool> mask{false, true, true, false, true, false,
                                 true, false, false, true, true, false};
    run_model_case("contrastive_end_to_end_2_blocks", 2, "", o, 601,
                   [&]<typename T>(const ConformerModel<T>& m) {
                     if constexpr (std::is_same_v<T, float>) {
                       return end_to_end_loss(m, xf, mask);
                     } else {
                       return end_to_end_loss(m, xd, mask);
                     }
                   },
                   rows);
  }
  return rows;
}

}  // namespace sslaudio
