// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/run_config.hpp"

#include <fstream>
#include <set>

#include "sslaudio/checkpoint.hpp"
#include "sslaudio/error.hpp"

namespace sslaudio {
namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where,
                    const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError("unknown key " + (where.empty() ? key : where + "." + key));
    }
  }
}

template <typename V>
void take(const json& j, const std::string& where, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception&) {
    throw ConfigError((where.empty() ? std::string() : where + ".") + key + " has the wrong type");
  }
}

void apply_pretrain(const json& j, PretrainConfig& p) {
  const std::string w = "pretrain";
  require_object(j, w, {"num_distractors", "mask_rate", "peak_lr", "warmup_steps", "total_steps",
                        "beta1", "beta2", "weight_decay", "adam_eps", "max_grad_norm",
                        "temperature", "batch_size"});
  take(j, w, "num_distractors", p.num_distractors);
  take(j, w, "mask_rate", p.mask_rate);
  take(j, w, "peak_lr", p.peak_lr);
  take(j, w, "warmup_steps", p.warmup_steps);
  take(j, w, "total_steps", p.total_steps);
  take(j, w, "beta1", p.beta1);
  take(j, w, "beta2", p.beta2);
  take(j, w, "weight_decay", p.weight_decay);
  take(j, w, "adam_eps", p.adam_eps);
  take(j, w, "max_grad_norm", p.max_grad_norm);
  take(j, w, "temperature", p.temperature);
  take(j, w, "batch_size", p.batch_size);
}

void apply_finetune(const json& j, FinetuneConfig& f) {
  const std::string w = "finetune";
  require_object(j, w, {"head", "peak_lr", "total_steps", "stage_fractions", "final_lr_factor",
                        "batch_size", "output_dropout", "mixup", "jitter", "timemask",
                        "consistency_weight", "balance", "max_jitter", "max_mask_frames", "beta1",
                        "beta2", "weight_decay", "adam_eps", "max_grad_norm"});
  if (j.contains("head")) {
    std::string head;
    take(j, w, "head", head);
    f.head = parse_head_kind(head);
  }
  take(j, w, "peak_lr", f.peak_lr);
  take(j, w, "total_steps", f.total_steps);
  take(j, w, "stage_fractions", f.stage_fractions);
  take(j, w, "final_lr_factor", f.final_lr_factor);
  take(j, w, "batch_size", f.batch_size);
  take(j, w, "output_dropout", f.output_dropout);
  take(j, w, "mixup", f.mixup_enabled);
  take(j, w, "jitter", f.jitter_enabled);
  take(j, w, "timemask", f.timemask_enabled);
  take(j, w, "consistency_weight", f.consistency_weight);
  take(j, w, "balance", f.balance_enabled);
  take(j, w, "max_jitter", f.max_jitter);
  take(j, w, "max_mask_frames", f.max_mask_frames);
  take(j, w, "beta1", f.beta1);
  take(j, w, "beta2", f.beta2);
  take(j, w, "weight_decay", f.weight_decay);
  take(j, w, "adam_eps", f.adam_eps);
  take(j, w, "max_grad_norm", f.max_grad_norm);
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  pretrain.validate();
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (eval_batch_size < 1) throw ConfigError("eval_batch_size must be >= 1");
  if (max_steps && *max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

RunConfig resolve_run_config(const json& file, const CliOverrides& cli) {
  RunConfig rc;
  const json& f = file.is_null() ? json::object() : file;
  require_object(f, "", {"preset", "model", "pretrain", "finetune", "data", "out_dir",
                         "init_checkpoint", "seed", "deterministic", "max_steps",
                         "checkpoint_every", "eval_batch_size"});
  take(f, "", "preset", rc.preset);
  rc.model_explicit = f.contains("preset") || f.contains("model") || cli.preset.has_value();
  if (cli.preset) rc.preset = *cli.preset;
  rc.model = ModelConfig::preset(rc.preset);
  if (f.contains("model")) rc.model = model_config_from_json(f.at("model"), rc.model);
  if (f.contains("pretrain")) apply_pretrain(f.at("pretrain"), rc.pretrain);
  if (f.contains("finetune")) apply_finetune(f.at("finetune"), rc.finetune);
  if (f.contains("data")) {
    require_object(f.at("data"), "data", {"manifest"});
    take(f.at("data"), "data", "manifest", rc.manifest);
  }
  take(f, "", "out_dir", rc.out_dir);
  take(f, "", "init_checkpoint", rc.init_checkpoint);
  take(f, "", "seed", rc.seed);
  take(f, "", "deterministic", rc.deterministic);
  if (f.contains("max_steps")) {
    std::int64_t steps = 0;
    take(f, "", "max_steps", steps);
    rc.max_steps = steps;
  }
  take(f, "", "checkpoint_every", rc.checkpoint_every);
  take(f, "", "eval_batch_size", rc.eval_batch_size);

  if (cli.out_dir) rc.out_dir = *cli.out_dir;
  if (cli.init_checkpoint) rc.init_checkpoint = *cli.init_checkpoint;
  if (cli.head) rc.finetune.head = parse_head_kind(*cli.head);
  if (cli.manifest) rc.manifest = *cli.manifest;
  if (cli.seed) rc.seed = *cli.seed;
  if (cli.max_steps) rc.max_steps = *cli.max_steps;
  rc.deterministic = rc.deterministic || cli.deterministic;
  rc.pretrain.seed = rc.seed;
  rc.finetune.seed = rc.seed;
  rc.validate();
  return rc;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const CliOverrides& cli) {
  json file;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + path->string());
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + path->string() + " is not valid JSON: " + e.what());
    }
  }
  return resolve_run_config(file, cli);
}

json run_config_to_json(const RunConfig& rc) {
  const auto& p = rc.pretrain;
  const auto& f = rc.finetune;
  json j{{"preset", rc.preset},
         {"model", model_config_to_json(rc.model)},
         {"pretrain",
          {{"num_distractors", p.num_distractors}, {"mask_rate", p.mask_rate},
           {"peak_lr", p.peak_lr}, {"warmup_steps", p.warmup_steps},
           {"total_steps", p.total_steps}, {"beta1", p.beta1}, {"beta2", p.beta2},
           {"weight_decay", p.weight_decay}, {"adam_eps", p.adam_eps},
           {"max_grad_norm", p.max_grad_norm}, {"temperature", p.temperature},
           {"batch_size", p.batch_size}}},
         {"finetune",
          {{"head", head_kind_name(f.head)}, {"peak_lr", f.peak_lr},
           {"total_steps", f.total_steps}, {"stage_fractions", f.stage_fractions},
           {"final_lr_factor", f.final_lr_factor}, {"batch_size", f.batch_size},
           {"output_dropout", f.output_dropout}, {"mixup", f.mixup_enabled},
           {"jitter", f.jitter_enabled}, {"timemask", f.timemask_enabled},
           {"consistency_weight", f.consistency_weight}, {"balance", f.balance_enabled},
           {"max_jitter", f.max_jitter}, {"max_mask_frames", f.max_mask_frames},
           {"beta1", f.beta1}, {"beta2", f.beta2}, {"weight_decay", f.weight_decay},
           {"adam_eps", f.adam_eps}, {"max_grad_norm", f.max_grad_norm}}},
         {"data", {{"manifest", rc.manifest}}},
         {"out_dir", rc.out_dir},
         {"init_checkpoint", rc.init_checkpoint},
         {"seed", rc.seed},
         {"deterministic", rc.deterministic},
         {"checkpoint_every", rc.checkpoint_every},
         {"eval_batch_size", rc.eval_batch_size}};
  if (rc.max_steps) j["max_steps"] = *rc.max_steps;
  return j;
}

}  // namespace sslaudio
