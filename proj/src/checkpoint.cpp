// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <unistd.h>

#include "sslaudio/error.hpp"

namespace sslaudio {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "sslaudio-checkpoint";

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

void append_floats(std::vector<unsigned char>& blob, const std::vector<float>& values) {
  const std::size_t start = blob.size();
  blob.resize(start + 4 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(values[i]));
    std::memcpy(blob.data() + start + 4 * i, &bits, 4);
  }
}

std::vector<float> read_floats(const std::vector<unsigned char>& blob, std::size_t offset,
                               std::size_t count) {
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, blob.data() + offset + 4 * i, 4);
    out[i] = std::bit_cast<float>(to_little(bits));
  }
  return out;
}

template <typename V>
void read_field(const json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("model.") + key + " has the wrong type");
  }
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

void copy_array(const NamedArray& src, Tensor<float>& dst, const std::string& name) {
  if (src.shape != dst.shape()) {
    throw ConfigError("checkpoint array '" + name + "' has shape " + shape_string(src.shape) +
                      ", model expects " + shape_string(dst.shape()));
  }
  std::copy(src.values.begin(), src.values.end(), dst.mutable_values().begin());
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

json model_config_to_json(const ModelConfig& c) {
  return json{{"num_blocks", c.num_blocks},     {"embed_dim", c.embed_dim},
              {"num_heads", c.num_heads},       {"ffn_dim", c.ffn_dim},
              {"latent_dim", c.latent_dim},     {"stack_factor", c.stack_factor},
              {"kernel_first", c.kernel_first}, {"kernel_rest", c.kernel_rest},
              {"dropout", c.dropout},           {"num_mel_bands", c.num_mel_bands},
              {"mask_span", c.mask_span}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig base) {
  if (!j.is_object()) throw ConfigError("model section must be an object");
  static const std::set<std::string> known{
      "num_blocks", "embed_dim",   "num_heads", "ffn_dim",       "latent_dim", "stack_factor",
      "kernel_first", "kernel_rest", "dropout", "num_mel_bands", "mask_span"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key model." + key);
  }
  read_field(j, "num_blocks", base.num_blocks);
  read_field(j, "embed_dim", base.embed_dim);
  read_field(j, "num_heads", base.num_heads);
  read_field(j, "ffn_dim", base.ffn_dim);
  read_field(j, "latent_dim", base.latent_dim);
  read_field(j, "stack_factor", base.stack_factor);
  read_field(j, "kernel_first", base.kernel_first);
  read_field(j, "kernel_rest", base.kernel_rest);
  read_field(j, "dropout", base.dropout);
  read_field(j, "num_mel_bands", base.num_mel_bands);
  read_field(j, "mask_span", base.mask_span);
  return base;
}

Checkpoint capture_checkpoint(const ConformerModel<float>& model,
                              const ClassificationHead<float>* head, const HeadInfo* head_info,
                              const OptimizerState<float>* optimizer, std::int64_t step,
                              std::uint64_t seed) {
  Checkpoint c;
  c.model = model.config();
  c.step = step;
  c.seed = seed;
  auto add = [&](const std::string& name, const Tensor<float>& t) {
    c.arrays.push_back({name, t.shape(), std::vector<float>(t.values().begin(), t.values().end())});
  };
  for (const auto& [name, t] : model.parameters()) add(name, t);
  for (const auto& [name, t] : model.buffers()) add(name, t);
  if (head != nullptr) {
    for (const auto& [name, t] : head->parameters()) add(name, t);
    HeadInfo info = head_info != nullptr ? *head_info : HeadInfo{};
    info.kind = head->kind();
    info.num_classes = head->num_classes();
    c.head = info;
  }
  if (optimizer != nullptr) c.optimizer = *optimizer;
  return c;
}

void restore_model(const Checkpoint& checkpoint, ConformerModel<float>& model) {
  if (!(checkpoint.model == model.config())) {
    throw ConfigError("checkpoint architecture " + model_config_to_json(checkpoint.model).dump() +
                      " does not match the configured model " +
                      model_config_to_json(model.config()).dump());
  }
  auto restore_group = [&](const std::vector<std::pair<std::string, Tensor<float>>>& group) {
    for (auto [name, t] : group) {
      const auto* a = checkpoint.find(name);
      if (a == nullptr) throw CorruptionError("missing array '" + name + "'");
      copy_array(*a, t, name);
    }
  };
  restore_group(model.parameters());
  restore_group(model.buffers());
}

void restore_head(const Checkpoint& checkpoint, ClassificationHead<float>& head) {
  if (!checkpoint.head) throw ConfigError("checkpoint has no classification head");
  if (checkpoint.head->kind != head.kind() || checkpoint.head->num_classes != head.num_classes()) {
    throw ConfigError("checkpoint head (" + head_kind_name(checkpoint.head->kind) + ", " +
                      std::to_string(checkpoint.head->num_classes) +
                      " classes) does not match the configured head");
  }
  for (auto [name, t] : head.parameters()) {
    const auto* a = checkpoint.find(name);
    if (a == nullptr) throw CorruptionError("missing array '" + name + "'");
    copy_array(*a, t, name);
  }
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& checkpoint) {
  std::set<std::string> names;
  std::vector<unsigned char> blob;
  json arrays = json::array();
  auto add = [&](const std::string& name, const Shape& shape, const std::vector<float>& values) {
    if (!names.insert(name).second) throw ContractError("duplicate array name '" + name + "'");
    if (shape_size(shape) != values.size()) {
      throw ContractError("array '" + name + "' size does not match its shape");
    }
    arrays.push_back({{"name", name}, {"shape", shape}, {"offset", blob.size()},
                      {"bytes", 4 * values.size()}});
    append_floats(blob, values);
  };
  for (const auto& a : checkpoint.arrays) add(a.name, a.shape, a.values);
  json header{{"format", kFormat},
              {"version", kCheckpointVersion},
              {"step", checkpoint.step},
              {"seed", checkpoint.seed},
              {"model", model_config_to_json(checkpoint.model)}};
  if (checkpoint.head) {
    header["head"] = {{"kind", head_kind_name(checkpoint.head->kind)},
                      {"num_classes", checkpoint.head->num_classes},
                      {"vocabulary", checkpoint.head->vocabulary}};
  }
  if (checkpoint.optimizer) {
    const auto& opt = *checkpoint.optimizer;
    header["optimizer"] = {{"step", opt.step}};
    for (const auto& [name, m] : opt.first_moment) {
      const auto v = opt.second_moment.find(name);
      if (v == opt.second_moment.end()) throw ContractError("optimizer moments disagree for " + name);
      add("adam.m." + name, Shape{m.size()}, m);
      add("adam.v." + name, Shape{v->second.size()}, v->second);
    }
  }
  header["arrays"] = std::move(arrays);
  header["blob_bytes"] = blob.size();

  auto tmp = dir;
  tmp += ".tmp-" + std::to_string(::getpid());
  std::error_code ec;
  std::filesystem::remove_all(tmp, ec);
  std::filesystem::create_directories(tmp, ec);
  if (ec) throw IoError("cannot create " + tmp.string() + ": " + ec.message());
  const std::string text = header.dump(2) + "\n";
  write_file(tmp / "tensors.bin", blob.data(), blob.size());
  write_file(tmp / "header.json", text.data(), text.size());
  auto old = dir;
  old += ".old-" + std::to_string(::getpid());
  const bool replace = std::filesystem::exists(dir);
  if (replace) {
    std::filesystem::rename(dir, old, ec);
    if (ec) throw IoError("cannot move aside " + dir.string() + ": " + ec.message());
  }
  std::filesystem::rename(tmp, dir, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + dir.string() + ": " + ec.message());
  if (replace) std::filesystem::remove_all(old, ec);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto header_bytes = read_file(dir / "header.json");
  const auto blob = read_file(dir / "tensors.bin");
  json header;
  try {
    header = json::parse(header_bytes.begin(), header_bytes.end());
  } catch (const json::exception& e) {
    throw CorruptionError("header.json does not parse: " + std::string(e.what()));
  }
  Checkpoint c;
  try {
    if (header.value("format", std::string()) != kFormat) throw CorruptionError("unknown format tag");
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw CorruptionError("version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    if (header.at("blob_bytes").get<std::size_t>() != blob.size()) {
      throw CorruptionError("tensors.bin has " + std::to_string(blob.size()) + " bytes, header declares " +
                            std::to_string(header.at("blob_bytes").get<std::size_t>()));
    }
    c.step = header.at("step").get<std::int64_t>();
    c.seed = header.at("seed").get<std::uint64_t>();
    try {
      c.model = model_config_from_json(header.at("model"));
    } catch (const ConfigError& e) {
      throw CorruptionError(e.what());
    }
    std::set<std::string> names;
    std::map<std::string, NamedArray> moments;
    for (const auto& entry : header.at("arrays")) {
      NamedArray a;
      a.name = entry.at("name").get<std::string>();
      a.shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto bytes = entry.at("bytes").get<std::size_t>();
      if (!names.insert(a.name).second) throw CorruptionError("duplicate array '" + a.name + "'");
      if (bytes != 4 * shape_size(a.shape)) {
        throw CorruptionError("array '" + a.name + "' byte length does not match its shape");
      }
      if (offset % 4 != 0 || offset > blob.size() || bytes > blob.size() - offset) {
        throw CorruptionError("array '" + a.name + "' lies outside tensors.bin");
      }
      a.values = read_floats(blob, offset, bytes / 4);
      if (a.name.rfind("adam.", 0) == 0) {
        moments.emplace(a.name, std::move(a));
      } else {
        c.arrays.push_back(std::move(a));
      }
    }
    if (header.contains("head")) {
      const auto& h = header.at("head");
      HeadInfo info;
      try {
        info.kind = parse_head_kind(h.at("kind").get<std::string>());
      } catch (const ConfigError& e) {
        throw CorruptionError(e.what());
      }
      info.num_classes = h.at("num_classes").get<int>();
      info.vocabulary = h.at("vocabulary").get<std::vector<std::string>>();
      c.head = info;
    }
    if (header.contains("optimizer")) {
      OptimizerState<float> opt;
      opt.step = header.at("optimizer").at("step").get<std::int64_t>();
      for (auto& [name, a] : moments) {
        if (name.rfind("adam.m.", 0) == 0) {
          opt.first_moment[name.substr(7)] = std::move(a.values);
        } else if (name.rfind("adam.v.", 0) == 0) {
          opt.second_moment[name.substr(7)] = std::move(a.values);
        } else {
          throw CorruptionError("unexpected optimizer array '" + name + "'");
        }
      }
      if (opt.first_moment.size() != opt.second_moment.size()) {
        throw CorruptionError("optimizer moment sets differ");
      }
      c.optimizer = std::move(opt);
    } else if (!moments.empty()) {
      throw CorruptionError("optimizer arrays present without optimizer header");
    }
  } catch (const json::exception& e) {
    throw CorruptionError("malformed header: " + std::string(e.what()));
  }
  return c;
}

}  // namespace sslaudio
