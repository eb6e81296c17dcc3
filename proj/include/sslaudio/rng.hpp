// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace sslaudio {

// Independent random streams keyed by (seed, purpose, step, index). A stream
// depends only on its key, so a resumed run reproduces the draws of an
// uninterrupted one without saving generator state.
enum class StreamPurpose : std::uint64_t {
  kInit = 1,
  kMask = 2,
  kDistractor = 3,
  kDropout = 4,
  kDataOrder = 5,
  kAugment = 6,
  kSynth = 7,
  kBalance = 8,
  kGradCheck = 9,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, StreamPurpose purpose,
                                   std::uint64_t step = 0, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ (index * 0xD1B54A32D192ED03ULL));
  return std::mt19937_64(h);
}

}  // namespace sslaudio
