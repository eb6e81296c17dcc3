// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "sslaudio/error.hpp"
#include "sslaudio/rng.hpp"
#include "sslaudio/wav.hpp"

namespace sslaudio {

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("synth." + what); };
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (class_frequency(num_classes - 1) >= dsp::kSampleRate / 2.0) {
    fail("num_classes puts a base frequency above Nyquist");
  }
  if (clips_per_class < 1) fail("clips_per_class must be >= 1");
  if (!(clip_seconds > 0.0)) fail("clip_seconds must be > 0");
  if (min_labels < 1 || max_labels < min_labels || max_labels > num_classes) {
    fail("label counts must satisfy 1 <= min_labels <= max_labels <= num_classes");
  }
  if (!(min_snr_db <= max_snr_db)) fail("min_snr_db must be <= max_snr_db");
  if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) fail("eval_fraction must be in [0, 1)");
}

std::string class_name(int c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "class_%02d", c);
  return buf;
}

SyntheticClip synthesize_clip(const SynthConfig& config, int index) {
  const int primary = index / config.clips_per_class;
  const int within = index % config.clips_per_class;
  auto rng = make_stream(config.seed, StreamPurpose::kSynth, static_cast<std::uint64_t>(index));
  SyntheticClip clip;
  clip.primary = primary;
  const int eval_count =
      static_cast<int>(std::lround(config.eval_fraction * config.clips_per_class));
  clip.split = within >= config.clips_per_class - eval_count ? Split::kEval : Split::kTrain;

  std::uniform_int_distribution<int> count_dist(config.min_labels, config.max_labels);
  const int count = count_dist(rng);
  std::vector<int> others;
  for (int c = 0; c < config.num_classes; ++c) {
    if (c != primary) others.push_back(c);
  }
  std::shuffle(others.begin(), others.end(), rng);
  clip.labels = {primary};
  clip.labels.insert(clip.labels.end(), others.begin(), others.begin() + (count - 1));
  std::sort(clip.labels.begin(), clip.labels.end());

  const auto n = static_cast<std::size_t>(std::lround(config.clip_seconds * dsp::kSampleRate));
  std::vector<double> x(n, 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int label : clip.labels) {
    const double f = class_frequency(label);
    const double phase = kTwoPi * unit(rng);
    double mod_f[3], mod_phase[3];
    for (int k = 0; k < 3; ++k) {
      mod_f[k] = 0.2 + 1.8 * unit(rng);
      mod_phase[k] = kTwoPi * unit(rng);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / dsp::kSampleRate;
      double envelope = 1.0;
      if (config.amplitude_modulation) {
        double g = 0.0;
        for (int k = 0; k < 3; ++k) g += std::sin(kTwoPi * mod_f[k] * t + mod_phase[k]);
        envelope = 0.1 + 0.9 * (0.5 + g / 6.0);
      }
      x[i] += envelope * std::sin(kTwoPi * f * t + phase);
    }
  }
  double power = 0.0;
  for (double v : x) power += v * v;
  power /= static_cast<double>(n);
  std::uniform_real_distribution<double> snr_dist(config.min_snr_db, config.max_snr_db);
  clip.snr_db = snr_dist(rng);
  std::normal_distribution<double> noise(0.0, std::sqrt(power / std::pow(10.0, clip.snr_db / 10.0)));
  double peak = 0.0;
  for (double& v : x) {
    v += noise(rng);
    peak = std::max(peak, std::abs(v));
  }
  clip.waveform.sample_rate = dsp::kSampleRate;
  clip.waveform.samples.resize(n);
  const double gain = peak > 0.0 ? 0.5 / peak : 1.0;
  for (std::size_t i = 0; i < n; ++i) clip.waveform.samples[i] = static_cast<float>(gain * x[i]);
  return clip;
}

std::vector<SyntheticClip> generate_synthetic_clips(const SynthConfig& config) {
  config.validate();
  std::vector<SyntheticClip> clips;
  const int total = config.num_classes * config.clips_per_class;
  clips.reserve(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) clips.push_back(synthesize_clip(config, i));
  return clips;
}

Manifest generate_synthetic_dataset(const SynthConfig& config,
                                    const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "audio", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "audio").string() + ": " + ec.message());
  Manifest m;
  m.base_dir = out_dir;
  const int total = config.num_classes * config.clips_per_class;
  for (int i = 0; i < total; ++i) {
    auto clip = synthesize_clip(config, i);
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%05d.wav", i);
    const std::string rel = std::string("audio/") + name;
    write_wav(out_dir / rel, clip.waveform);
    ManifestRecord r;
    r.audio_path = rel;
    for (int c : clip.labels) r.labels.push_back(class_name(c));
    r.split = clip.split;
    m.records.push_back(std::move(r));
  }
  m.rebuild_vocabulary();
  write_manifest(m, out_dir / "manifest.tsv");
  return m;
}

}  // namespace sslaudio
