// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace sslaudio {

enum class Split { kTrain, kValid, kEval };

/// "train", "valid" or "eval"; throws ConfigError otherwise.
Split parse_split(std::string_view name);
std::string split_name(Split split);

struct ManifestRecord {
  std::string audio_path;
  std::vector<std::string> labels;  // sorted, unique
  Split split = Split::kTrain;

  bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::vector<std::string> vocabulary;  // sorted unique labels over all records
  std::filesystem::path base_dir;       // relative audio paths resolve against this

  std::filesystem::path resolve(const ManifestRecord& record) const;
  /// Multi-hot vector over the vocabulary.
  std::vector<float> targets(const ManifestRecord& record) const;
  std::vector<const ManifestRecord*> select(Split split) const;
  void rebuild_vocabulary();
};

/// One record per line: path TAB semicolon-joined labels TAB split.
/// Blank lines and lines starting with '#' are skipped.
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
Manifest read_manifest(const std::filesystem::path& path);
std::string format_manifest(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace sslaudio
