// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sslaudio/dsp.hpp"

namespace sslaudio {

/// Reads RIFF/WAVE PCM 16-bit mono 16 kHz; samples are scaled by 1/32768.
/// Throws FormatError naming the offending header field, IoError if unreadable.
dsp::Waveform read_wav(const std::filesystem::path& path);
dsp::Waveform parse_wav(std::span<const unsigned char> bytes, const std::string& origin = "<memory>");

/// Writes PCM 16-bit mono; samples are rounded and clipped to [-32768, 32767].
void write_wav(const std::filesystem::path& path, const dsp::Waveform& waveform);
std::vector<unsigned char> encode_wav(const dsp::Waveform& waveform);

}  // namespace sslaudio
