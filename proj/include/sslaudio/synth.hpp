// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sslaudio/dsp.hpp"
#include "sslaudio/manifest.hpp"

namespace sslaudio {

struct SynthConfig {
  int num_classes = 8;
  int clips_per_class = 50;
  double clip_seconds = 4.0;
  int min_labels = 1;
  int max_labels = 3;
  double min_snr_db = 5.0;
  double max_snr_db = 20.0;
  double eval_fraction = 0.2;  // last clips of each class go to the eval split
  bool amplitude_modulation = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Base frequency of class c: 200 (c + 1) Hz.
inline double class_frequency(int c) { return 200.0 * (c + 1); }
std::string class_name(int c);

struct SyntheticClip {
  dsp::Waveform waveform;
  std::vector<int> labels;  // sorted; labels.front() is not necessarily the primary class
  int primary = 0;
  double snr_db = 0.0;
  Split split = Split::kTrain;
};

/// Clip index i belongs to primary class i / clips_per_class. Each clip is
/// the sum of one sine per positive class, each under its own slow random
/// envelope, plus white Gaussian noise at the drawn SNR, peak-normalized to 0.5.
SyntheticClip synthesize_clip(const SynthConfig& config, int index);
std::vector<SyntheticClip> generate_synthetic_clips(const SynthConfig& config);

/// Writes audio/clip_NNNNN.wav and manifest.tsv under out_dir.
Manifest generate_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace sslaudio
