// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sslaudio/error.hpp"

namespace sslaudio {
namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace

dsp::Waveform parse_wav(std::span<const unsigned char> bytes, const std::string& origin) {
  auto fail = [&](const std::string& what) { throw FormatError(origin + ": " + what); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) fail("truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      if (le16(f) != 1) fail("audio_format " + std::to_string(le16(f)) + " is not PCM (1)");
      if (le16(f + 2) != 1) fail("num_channels " + std::to_string(le16(f + 2)) + " is not mono (1)");
      if (le32(f + 4) != dsp::kSampleRate) {
        fail("sample_rate " + std::to_string(le32(f + 4)) + " is not 16000");
      }
      if (le16(f + 14) != 16) {
        fail("bits_per_sample " + std::to_string(le16(f + 14)) + " is not 16");
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + size > bytes.size()) fail("data chunk runs past end of file");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) fail("missing fmt chunk before data");
  if (data == nullptr) fail("missing data chunk");
  if (data_size % 2 != 0) fail("data chunk size is odd");
  dsp::Waveform w;
  w.sample_rate = dsp::kSampleRate;
  w.samples.resize(data_size / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const auto raw = static_cast<std::int16_t>(le16(data + 2 * i));
    w.samples[i] = static_cast<float>(raw) / 32768.0f;
  }
  return w;
}

dsp::Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return parse_wav(bytes, path.string());
}

std::vector<unsigned char> encode_wav(const dsp::Waveform& waveform) {
  if (waveform.sample_rate != dsp::kSampleRate) {
    throw FormatError("sample_rate " + std::to_string(waveform.sample_rate) + " is not 16000");
  }
  const auto data_bytes = static_cast<std::uint32_t>(2 * waveform.samples.size());
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, dsp::kSampleRate);
  put32(out, dsp::kSampleRate * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (float s : waveform.samples) {
    const double scaled = std::nearbyint(static_cast<double>(s) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const dsp::Waveform& waveform) {
  const auto bytes = encode_wav(waveform);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace sslaudio
