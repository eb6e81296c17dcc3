// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>

#include "sslaudio/tensor.hpp"

namespace sslaudio {

/// NPY version 1.0, little-endian float32, C order.
void write_npy(const std::filesystem::path& path, const Shape& shape, std::span<const float> values);

}  // namespace sslaudio
