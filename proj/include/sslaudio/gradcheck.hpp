// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "sslaudio/tensor.hpp"

namespace sslaudio {

enum class Stencil {
  kTwoPoint,   // (f(x+h) - f(x-h)) / 2h
  kFourPoint,  // (-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  // Location and values at the worst coordinate.
  std::size_t worst_leaf = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of a scalar function at `point` with
/// central differences of step `eps` over every coordinate.
template <typename T>
GradCheckResult grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f,
                           const Tensor<T>& point, double eps,
                           Stencil stencil = Stencil::kTwoPoint);

/// Same check over several leaf tensors that `loss` reads (typically model
/// parameters). Leaves are perturbed in place and restored bit-exactly. With
/// `max_coords_per_leaf` > 0 only a seeded random subset of each leaf's
/// coordinates is probed.
template <typename T>
GradCheckResult grad_check_leaves(const std::function<Tensor<T>()>& loss,
                                  std::vector<Tensor<T>> leaves, double eps,
                                  Stencil stencil = Stencil::kTwoPoint,
                                  std::size_t max_coords_per_leaf = 0,
                                  std::uint64_t sample_seed = 0);

/// Single-precision check: analytic gradients from the float graph against
/// differences of the same function evaluated in double precision. The two
/// leaf lists must correspond and hold equal values.
GradCheckResult grad_check_mixed(const std::function<Tensor<float>()>& loss_f,
                                 std::vector<Tensor<float>> leaves_f,
                                 const std::function<Tensor<double>()>& loss_d,
                                 std::vector<Tensor<double>> leaves_d, double eps,
                                 Stencil stencil = Stencil::kFourPoint,
                                 std::size_t max_coords_per_leaf = 0,
                                 std::uint64_t sample_seed = 0);

}  // namespace sslaudio
