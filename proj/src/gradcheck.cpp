// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace sslaudio {
namespace {

template <typename T>
double evaluate(const std::function<Tensor<T>()>& loss) {
  NoGradScope<T> no_grad;
  const Tensor<T> value = loss();
  if (value.size() != 1) throw ContractError("grad_check: function must be scalar-valued");
  const double v = static_cast<double>(value.item());
  if (!std::isfinite(v)) throw NumericError("grad_check: function is non-finite at a probe point");
  return v;
}

template <typename T>
std::vector<std::vector<double>> analytic_gradient(const std::function<Tensor<T>()>& loss,
                                                   std::vector<Tensor<T>>& leaves) {
  for (auto& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.clear_grad();
  }
  Graph<T> graph;
  {
    GraphScope<T> scope(graph);
    const Tensor<T> value = loss();
    if (value.size() != 1) throw ContractError("grad_check: function must be scalar-valued");
    if (!std::isfinite(static_cast<double>(value.item()))) {
      throw NumericError("grad_check: function is non-finite at the check point");
    }
    backward(graph, value);
  }
  std::vector<std::vector<double>> grads;
  for (auto& leaf : leaves) {
    std::vector<double> g(leaf.size(), 0.0);
    if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), g.begin());
    grads.push_back(std::move(g));
    leaf.clear_grad();
  }
  return grads;
}

using CoordinateSets = std::vector<std::vector<std::size_t>>;

// All coordinates, or a sorted random subset of at most `max_per_leaf`.
template <typename T>
CoordinateSets choose_coordinates(const std::vector<Tensor<T>>& leaves, std::size_t max_per_leaf,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CoordinateSets sets;
  for (const auto& leaf : leaves) {
    std::vector<std::size_t> all(leaf.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (max_per_leaf > 0 && all.size() > max_per_leaf) {
      std::vector<std::size_t> picked;
      std::sample(all.begin(), all.end(), std::back_inserter(picked), max_per_leaf, rng);
      all = std::move(picked);
    }
    sets.push_back(std::move(all));
  }
  return sets;
}

template <typename T>
std::vector<std::vector<double>> numeric_gradient(const std::function<Tensor<T>()>& loss,
                                                  std::vector<Tensor<T>>& leaves, double eps,
                                                  Stencil stencil, const CoordinateSets& coords) {
  std::vector<std::vector<double>> grads;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto values = leaves[l].mutable_values();
    std::vector<double> g(values.size(), 0.0);
    for (std::size_t i : coords[l]) {
      const T original = values[i];
      auto probe = [&](double offset) {
        values[i] = static_cast<T>(static_cast<double>(original) + offset);
        const double v = evaluate(loss);
        values[i] = original;
        return v;
      };
      if (stencil == Stencil::kTwoPoint) {
        g[i] = (probe(eps) - probe(-eps)) / (2.0 * eps);
      } else {
        // Differences first so equal probes give exactly zero.
        const double near = probe(eps) - probe(-eps);
        const double far = probe(2.0 * eps) - probe(-2.0 * eps);
        g[i] = (8.0 * near - far) / (12.0 * eps);
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

GradCheckResult compare(const std::vector<std::vector<double>>& analytic,
                        const std::vector<std::vector<double>>& numeric,
                        const CoordinateSets& coords) {
  GradCheckResult result;
  for (std::size_t l = 0; l < analytic.size(); ++l) {
    for (std::size_t i : coords[l]) {
      const double err = relative_error(analytic[l][i], numeric[l][i]);
      ++result.coordinates;
      if (err > result.max_relative_error || result.coordinates == 1) {
        result.max_relative_error = err;
        result.worst_leaf = l;
        result.worst_index = i;
        result.analytic = analytic[l][i];
        result.numeric = numeric[l][i];
      }
    }
  }
  return result;
}

void check_eps(double eps) {
  if (!(eps > 0.0)) throw ContractError("grad_check: eps must be positive");
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

template <typename T>
GradCheckResult grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f,
                           const Tensor<T>& point, double eps, Stencil stencil) {
  check_eps(eps);
  Tensor<T> x = point.clone(true);
  return grad_check_leaves<T>([&] { return f(x); }, {x}, eps, stencil);
}

template <typename T>
GradCheckResult grad_check_leaves(const std::function<Tensor<T>()>& loss,
                                  std::vector<Tensor<T>> leaves, double eps, Stencil stencil,
                                  std::size_t max_coords_per_leaf, std::uint64_t sample_seed) {
  check_eps(eps);
  const auto coords = choose_coordinates(leaves, max_coords_per_leaf, sample_seed);
  const auto analytic = analytic_gradient(loss, leaves);
  const auto numeric = numeric_gradient(loss, leaves, eps, stencil, coords);
  return compare(analytic, numeric, coords);
}

GradCheckResult grad_check_mixed(const std::function<Tensor<float>()>& loss_f,
                                 std::vector<Tensor<float>> leaves_f,
                                 const std::function<Tensor<double>()>& loss_d,
                                 std::vector<Tensor<double>> leaves_d, double eps,
                                 Stencil stencil, std::size_t max_coords_per_leaf,
                                 std::uint64_t sample_seed) {
  check_eps(eps);
  if (leaves_f.size() != leaves_d.size()) {
    throw ContractError("grad_check_mixed: leaf lists differ in length");
  }
  for (std::size_t l = 0; l < leaves_f.size(); ++l) {
    if (leaves_f[l].shape() != leaves_d[l].shape()) {
      throw ContractError("grad_check_mixed: leaf " + std::to_string(l) + " shapes differ");
    }
  }
  const auto coords = choose_coordinates(leaves_f, max_coords_per_leaf, sample_seed);
  const auto analytic = analytic_gradient(loss_f, leaves_f);
  const auto numeric = numeric_gradient(loss_d, leaves_d, eps, stencil, coords);
  return compare(analytic, numeric, coords);
}

template GradCheckResult grad_check<float>(const std::function<Tensor<float>(const Tensor<float>&)>&,
                                           const Tensor<float>&, double, Stencil);
template GradCheckResult grad_check<double>(
    const std::function<Tensor<double>(const Tensor<double>&)>&, const Tensor<double>&, double,
    Stencil);
template GradCheckResult grad_check_leaves<float>(const std::function<Tensor<float>()>&,
                                                  std::vector<Tensor<float>>, double, Stencil,
                                                  std::size_t, std::uint64_t);
template GradCheckResult grad_check_leaves<double>(const std::function<Tensor<double>()>&,
                                                   std::vector<Tensor<double>>, double, Stencil,
                                                   std::size_t, std::uint64_t);

}  // namespace sslaudio
