// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sslaudio/error.hpp"

namespace sslaudio::dsp {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(int num_bands, int sample_rate, int fft_size) {
  if (num_bands < 1) throw ConfigError("mel filterbank needs at least one band");
  if (sample_rate <= 0 || fft_size < 2) throw ConfigError("invalid sample rate or FFT size");
  MelFilterbank fb;
  fb.num_bands = static_cast<std::size_t>(num_bands);
  fb.num_bins = static_cast<std::size_t>(fft_size / 2 + 1);
  if (fb.num_bands > fb.num_bins) {
    throw ConfigError(std::to_string(num_bands) + " mel bands exceed " +
                      std::to_string(fb.num_bins) + " DFT bins");
  }
  const double nyquist = sample_rate / 2.0;
  const double top = hz_to_mel(nyquist);
  std::vector<double> edges(fb.num_bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(fb.num_bands + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / fft_size;
  fb.weights.assign(fb.num_bands * fb.num_bins, 0.0);
  for (std::size_t b = 0; b < fb.num_bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    fb.center_hz.push_back(mid);
    fb.center_bins.push_back(mid / bin_hz);
    double area = 0.0;
    for (std::size_t k = 0; k < fb.num_bins; ++k) {
      const double f = k * bin_hz;
      const double w = std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
      fb.weights[b * fb.num_bins + k] = w;
      area += w;
    }
    if (!(area > 0.0)) {
      throw ConfigError("mel band " + std::to_string(b) +
                        " covers no DFT bin; too many bands for the FFT size");
    }
  }
  return fb;
}

void fft(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ConfigError("FFT size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t k = 0; k < len / 2; ++k) {
      const std::complex<double> w(std::cos(angle * k), std::sin(angle * k));
      for (std::size_t start = 0; start < n; start += len) {
        const auto even = data[start + k];
        const auto odd = data[start + k + len / 2] * w;
        data[start + k] = even + odd;
        data[start + k + len / 2] = even - odd;
      }
    }
  }
}

LogmelExtractor::LogmelExtractor(LogmelConfig config)
    : config_(config),
      filterbank_(mel_filterbank(config.num_bands, config.sample_rate, config.fft_size)) {
  if (config_.window_length <= 0 || config_.hop_length <= 0) {
    throw ConfigError("window and hop lengths must be positive");
  }
  if (config_.fft_size < config_.window_length) {
    throw ConfigError("FFT size must be at least the window length");
  }
  for (std::size_t b = 0; b < filterbank_.num_bands; ++b) {
    std::size_t first = filterbank_.num_bins, last = 0;
    for (std::size_t k = 0; k < filterbank_.num_bins; ++k) {
      if (filterbank_.weight(b, k) > 0.0) {
        first = std::min(first, k);
        last = k + 1;
      }
    }
    band_first_.push_back(first);
    band_last_.push_back(last);
  }
  // Periodic Hann.
  window_.resize(static_cast<std::size_t>(config_.window_length));
  for (std::size_t i = 0; i < window_.size(); ++i) {
    window_[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(window_.size()));
  }
}

std::size_t LogmelExtractor::num_frames(std::size_t num_samples) const {
  const auto hop = static_cast<std::size_t>(config_.hop_length);
  return (num_samples + hop - 1) / hop;
}

namespace {
// Reflection about the end samples, repeated as often as needed.
std::size_t reflect(long index, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * static_cast<long>(n - 1);
  long i = index % period;
  if (i < 0) i += period;
  if (i >= static_cast<long>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}
}  // namespace

LogmelSpectrogram LogmelExtractor::extract(const Waveform& waveform) const {
  if (waveform.samples.empty()) throw InputError("empty waveform");
  if (waveform.sample_rate != config_.sample_rate) {
    throw InputError("sample rate " + std::to_string(waveform.sample_rate) + " Hz, expected " +
                     std::to_string(config_.sample_rate) + " Hz (no resampling)");
  }
  const std::size_t n = waveform.samples.size();
  const std::size_t frames = num_frames(n);
  const std::size_t bands = filterbank_.num_bands, bins = filterbank_.num_bins;
  const long half = config_.window_length / 2;

  LogmelSpectrogram out;
  out.num_frames = frames;
  out.num_bands = bands;
  out.values.resize(frames * bands);
  out.hop_seconds = static_cast<double>(config_.hop_length) / config_.sample_rate;
  out.window_seconds = static_cast<double>(config_.window_length) / config_.sample_rate;

  std::vector<std::complex<double>> buffer(static_cast<std::size_t>(config_.fft_size));
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    // Frame t is centered on sample t * hop.
    const long start = static_cast<long>(t) * config_.hop_length - half;
    std::fill(buffer.begin(), buffer.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < window_.size(); ++i) {
      const double s = waveform.samples[reflect(start + static_cast<long>(i), n)];
      buffer[i] = std::complex<double>(s * window_[i], 0.0);
    }
    fft(buffer);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(buffer[k]);
    for (std::size_t b = 0; b < bands; ++b) {
      const double* w = filterbank_.weights.data() + b * bins;
      double energy = 0.0;
      for (std::size_t k = band_first_[b]; k < band_last_[b]; ++k) energy += w[k] * power[k];
      out.values[t * bands + b] = static_cast<float>(std::log(energy + config_.floor_epsilon));
    }
  }
  return out;
}

LogmelSpectrogram logmel(const Waveform& waveform, const LogmelConfig& config) {
  return LogmelExtractor(config).extract(waveform);
}

}  // namespace sslaudio::dsp
