// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sslaudio/error.hpp"

namespace sslaudio {
namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  while (true) {
    const auto end = s.find(sep, start);
    parts.push_back(s.substr(start, end - start));
    if (end == std::string::npos) return parts;
    start = end + 1;
  }
}

}  // namespace

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "eval") return Split::kEval;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train, valid or eval)");
}

std::string split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kEval: return "eval";
  }
  return "train";
}

std::filesystem::path Manifest::resolve(const ManifestRecord& record) const {
  std::filesystem::path p(record.audio_path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::vector<float> Manifest::targets(const ManifestRecord& record) const {
  std::vector<float> t(vocabulary.size(), 0.0f);
  for (const auto& label : record.labels) {
    auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), label);
    if (it == vocabulary.end() || *it != label) {
      throw InputError("label '" + label + "' is not in the vocabulary");
    }
    t[static_cast<std::size_t>(it - vocabulary.begin())] = 1.0f;
  }
  return t;
}

std::vector<const ManifestRecord*> Manifest::select(Split split) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

void Manifest::rebuild_vocabulary() {
  std::set<std::string> all;
  for (const auto& r : records) all.insert(r.labels.begin(), r.labels.end());
  vocabulary.assign(all.begin(), all.end());
}

Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  Manifest m;
  m.base_dir = base_dir;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_on(line, '\t');
    if (fields.size() != 3) {
      throw ParseError("expected 3 tab-separated fields, found " + std::to_string(fields.size()),
                       number);
    }
    ManifestRecord r;
    r.audio_path = fields[0];
    if (r.audio_path.empty()) throw ParseError("empty audio path", number);
    std::set<std::string> labels;
    if (!fields[1].empty()) {
      for (auto& label : split_on(fields[1], ';')) {
        if (label.empty()) throw ParseError("empty label name", number);
        labels.insert(std::move(label));
      }
    }
    r.labels.assign(labels.begin(), labels.end());
    try {
      r.split = parse_split(fields[2]);
    } catch (const ConfigError&) {
      throw ParseError("unknown split tag '" + fields[2] + "'", number);
    }
    m.records.push_back(std::move(r));
  }
  if (in.bad()) throw IoError("failed reading manifest");
  m.rebuild_vocabulary();
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

std::string format_manifest(const Manifest& manifest) {
  std::ostringstream out;
  for (const auto& r : manifest.records) {
    out << r.audio_path << '\t';
    for (std::size_t i = 0; i < r.labels.size(); ++i) out << (i ? ";" : "") << r.labels[i];
    out << '\t' << split_name(r.split) << '\n';
  }
  return out.str();
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << format_manifest(manifest);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace sslaudio
