// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sslaudio::dsp {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<float> samples;  // mono, nominally in [-1, 1]
  int sample_rate = kSampleRate;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct LogmelConfig {
  int sample_rate = kSampleRate;
  int window_length = 1024;  // 64 ms
  int hop_length = 320;      // 20 ms
  int fft_size = 1024;
  int num_bands = 64;
  double floor_epsilon = 1e-10;
};

/// T x num_bands natural-log mel energies, frame-major.
struct LogmelSpectrogram {
  std::size_t num_frames = 0;
  std::size_t num_bands = 0;
  std::vector<float> values;
  double hop_seconds = 0.020;
  double window_seconds = 0.064;

  float at(std::size_t frame, std::size_t band) const {
    return values[frame * num_bands + band];
  }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters with centers equally spaced on the mel scale between
/// 0 Hz and Nyquist. `weights` is num_bands x (fft_size / 2 + 1).
struct MelFilterbank {
  std::size_t num_bands = 0;
  std::size_t num_bins = 0;
  std::vector<double> weights;
  std::vector<double> center_hz;
  std::vector<double> center_bins;  // fractional DFT bin of each center

  double weight(std::size_t band, std::size_t bin) const {
    return weights[band * num_bins + bin];
  }
};

MelFilterbank mel_filterbank(int num_bands, int sample_rate, int fft_size);

/// In-place radix-2 decimation-in-time FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& data);

/// Precomputes window, filterbank and FFT size for repeated extraction.
/// Immutable after construction; extract() may run concurrently.
class LogmelExtractor {
 public:
  explicit LogmelExtractor(LogmelConfig config = {});

  LogmelSpectrogram extract(const Waveform& waveform) const;

  const LogmelConfig& config() const { return config_; }
  const MelFilterbank& filterbank() const { return filterbank_; }
  std::size_t num_frames(std::size_t num_samples) const;

 private:
  LogmelConfig config_;
  MelFilterbank filterbank_;
  std::vector<double> window_;
  // Nonzero support [first, last) of each filter.
  std::vector<std::size_t> band_first_;
  std::vector<std::size_t> band_last_;
};

LogmelSpectrogram logmel(const Waveform& waveform, const LogmelConfig& config = {});

}  // namespace sslaudio::dsp
