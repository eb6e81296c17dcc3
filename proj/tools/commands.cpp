// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sslaudio/checkpoint.hpp"
#include "sslaudio/dsp.hpp"
#include "sslaudio/error.hpp"
#include "sslaudio/finetune.hpp"
#include "sslaudio/gradsuite.hpp"
#include "sslaudio/manifest.hpp"
#include "sslaudio/metrics.hpp"
#include "sslaudio/model.hpp"
#include "sslaudio/npy.hpp"
#include "sslaudio/training.hpp"
#include "sslaudio/wav.hpp"

namespace sslaudio::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

Manifest load_manifest(const RunConfig& config) {
  if (config.manifest.empty()) throw ConfigError("a manifest is required (--manifest or data.manifest)");
  return read_manifest(config.manifest);
}

std::vector<const ManifestRecord*> records_for(const Manifest& manifest, bool training) {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : manifest.records) {
    if ((r.split == Split::kEval) != training) out.push_back(&r);
  }
  return out;
}

/// Appends JSON lines, flushing after each so a crash loses at most one line.
class MetricsLog {
 public:
  MetricsLog(const fs::path& path, bool append) : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string());
  }
  void write(const ordered_json& line) {
    out_ << line.dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("failed writing metrics log");
  }

 private:
  std::ofstream out_;
};

/// Keeps the lines with step <= last_step so a resumed run continues the log
/// exactly where its checkpoint left off.
void truncate_log(const fs::path& path, std::int64_t last_step) {
  std::ifstream in(path);
  if (!in) return;
  std::string kept, line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      break;  // torn final line
    }
    if (!j.contains("step") || j["step"].get<std::int64_t>() > last_step) break;
    kept += line + '\n';
  }
  in.close();
  write_text(path, kept);
}

class StepTimer {
 public:
  explicit StepTimer(bool deterministic) : deterministic_(deterministic) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return deterministic_ ? 0.0 : ms;
  }

 private:
  bool deterministic_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

/// Uses the checkpoint's architecture unless the user chose one explicitly,
/// in which case the two must agree.
ModelConfig reconcile_model(const RunConfig& config, const Checkpoint& ckpt, const std::string& origin) {
  if (config.model_explicit && !(config.model == ckpt.model)) {
    throw ConfigError("architecture of " + origin + " differs from the configured model");
  }
  return ckpt.model;
}

std::int64_t end_step(std::int64_t total, const std::optional<std::int64_t>& max_steps) {
  return max_steps ? std::min(total, *max_steps) : total;
}

std::vector<LabeledExample> load_examples(const Manifest& manifest,
                                          const std::vector<const ManifestRecord*>& records,
                                          const std::vector<std::string>& vocabulary) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) index[vocabulary[i]] = i;
  std::vector<LabeledExample> out;
  out.reserve(records.size());
  for (const auto* r : records) {
    LabeledExample ex;
    ex.waveform = read_wav(manifest.resolve(*r));
    ex.targets.assign(vocabulary.size(), 0.0f);
    for (const auto& label : r->labels) {
      auto it = index.find(label);
      if (it == index.end()) throw InputError("label '" + label + "' is not in the vocabulary");
      ex.targets[it->second] = 1.0f;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_eval_report(const fs::path& path, const EvalReport& report,
                       const std::vector<std::string>& vocabulary) {
  ordered_json per_class = ordered_json::object();
  for (std::size_t c = 0; c < vocabulary.size(); ++c) {
    per_class[vocabulary[c]] = optional_number(report.per_class_ap[c]);
  }
  ordered_json j;
  j["num_examples"] = report.num_examples;
  j["map"] = report.map;
  j["accuracy"] = optional_number(report.accuracy);
  j["per_class_ap"] = per_class;
  write_text(path, j.dump(2) + "\n");
}

EvalReport evaluate_examples(const std::vector<LabeledExample>& examples,
                             const ConformerModel<float>& model, const ClassificationHead<float>& head,
                             const dsp::LogmelExtractor& extractor, int batch_size) {
  std::vector<const LabeledExample*> ptrs;
  std::vector<std::vector<float>> targets;
  for (const auto& ex : examples) {
    ptrs.push_back(&ex);
    targets.push_back(ex.targets);
  }
  auto scores = predict_probabilities(ptrs, model, head, extractor,
                                      static_cast<std::size_t>(batch_size));
  return evaluate_predictions(scores, targets);
}

void print_report(const EvalReport& r) {
  std::cout << "examples " << r.num_examples << " map " << r.map;
  if (r.accuracy) std::cout << " accuracy " << *r.accuracy;
  std::cout << '\n';
}

}  // namespace

void run_pretrain(const RunConfig& config) {
  const Manifest manifest = load_manifest(config);
  const auto records = records_for(manifest, true);
  if (records.empty()) throw InputError("manifest has no train or valid records");
  const dsp::LogmelExtractor extractor;
  std::vector<dsp::LogmelSpectrogram> clips;
  clips.reserve(records.size());
  for (const auto* r : records) clips.push_back(extractor.extract(read_wav(manifest.resolve(*r))));

  const fs::path out(config.out_dir);
  ensure_dir(out / "checkpoints");
  const fs::path latest = out / "checkpoints" / "latest";
  const fs::path log_path = out / "pretrain_metrics.jsonl";

  ModelConfig arch = config.model;
  std::optional<Checkpoint> resume;
  std::optional<Checkpoint> init;
  if (fs::exists(latest)) {
    resume = load_checkpoint(latest);
    arch = reconcile_model(config, *resume, latest.string());
    if (!resume->optimizer) throw CorruptionError(latest.string() + " has no optimizer state");
  } else if (!config.init_checkpoint.empty()) {
    init = load_checkpoint(config.init_checkpoint);
    arch = reconcile_model(config, *init, config.init_checkpoint);
  }
  ConformerModel<float> model(arch, config.seed);
  OptimizerState<float> state;
  std::int64_t first = 0;
  if (resume) {
    restore_model(*resume, model);
    state = *resume->optimizer;
    first = resume->step;
    truncate_log(log_path, first);
  } else if (init) {
    restore_model(*init, model);
  }
  RunConfig effective = config;
  effective.model = arch;
  write_text(out / "config.json", run_config_to_json(effective).dump(2) + "\n");

  const std::int64_t end = end_step(config.pretrain.total_steps, config.max_steps);
  MetricsLog log(log_path, first > 0);
  StepTimer timer(config.deterministic);
  auto save = [&](std::int64_t step) {
    save_checkpoint(latest, capture_checkpoint(model, nullptr, nullptr, &state, step, config.seed));
  };
  run_pretraining(clips, model, state, config.pretrain, first, end,
                  [&](std::int64_t step, const PretrainStepStats& s) {
                    ordered_json line;
                    line["step"] = step;
                    line["loss"] = s.loss;
                    line["lr"] = s.lr;
                    line["grad_norm"] = s.grad_norm;
                    line["wall_ms"] = timer.lap();
                    log.write(line);
                    if (step % config.checkpoint_every == 0 && step != end) save(step);
                  });
  if (end > first || !resume) save(std::max(first, end));
  std::cout << "pretrained steps " << first << ".." << std::max(first, end) << " -> "
            << latest.string() << '\n';
}

void run_finetune(RunConfig config, bool from_scratch) {
  const Manifest manifest = load_manifest(config);
  const auto& vocab = manifest.vocabulary;
  if (vocab.empty()) throw InputError("manifest has no labels");
  config.finetune.num_classes = static_cast<int>(vocab.size());
  config.finetune.validate();

  ModelConfig arch = config.model;
  std::optional<Checkpoint> init;
  if (!from_scratch && !config.init_checkpoint.empty()) {
    init = load_checkpoint(config.init_checkpoint);
    arch = reconcile_model(config, *init, config.init_checkpoint);
  }
  ConformerModel<float> model(arch, config.seed);
  if (init) restore_model(*init, model);
  ClassificationHead<float> head(config.finetune.head, arch.latent_dim, config.finetune.num_classes,
                                 config.seed);

  const auto train = load_examples(manifest, records_for(manifest, true), vocab);
  const auto eval = load_examples(manifest, records_for(manifest, false), vocab);
  if (train.empty()) throw InputError("manifest has no train or valid records");

  const fs::path out(config.out_dir);
  ensure_dir(out / "checkpoints");
  RunConfig effective = config;
  effective.model = arch;
  if (from_scratch) effective.init_checkpoint.clear();
  write_text(out / "config.json", run_config_to_json(effective).dump(2) + "\n");

  const dsp::LogmelExtractor extractor;
  OptimizerState<float> state;
  const std::int64_t end = end_step(config.finetune.total_steps, config.max_steps);
  MetricsLog log(out / "finetune_metrics.jsonl", false);
  StepTimer timer(config.deterministic);
  run_finetuning(train, model, head, state, config.finetune, 0, end, extractor,
                 [&](std::int64_t step, const FinetuneStepStats& s) {
                   ordered_json line;
                   line["step"] = step;
                   line["loss"] = s.total;
                   line["bce"] = s.bce;
                   line["consistency"] = s.consistency;
                   line["lr"] = s.lr;
                   line["grad_norm"] = s.grad_norm;
                   line["wall_ms"] = timer.lap();
                   log.write(line);
                 });
  const HeadInfo info{config.finetune.head, config.finetune.num_classes, vocab};
  save_checkpoint(out / "checkpoints" / "finetuned",
                  capture_checkpoint(model, &head, &info, &state, end, config.seed));
  if (eval.empty()) {
    std::cerr << "no eval records; skipping evaluation\n";
    return;
  }
  const auto report = evaluate_examples(eval, model, head, extractor, config.eval_batch_size);
  write_eval_report(out / "eval_report.json", report, vocab);
  print_report(report);
}

void run_evaluate(const RunConfig& config, const std::string& split_name_arg) {
  if (config.init_checkpoint.empty()) throw ConfigError("evaluate needs --init-checkpoint");
  const Checkpoint ckpt = load_checkpoint(config.init_checkpoint);
  if (!ckpt.head) throw ConfigError(config.init_checkpoint + " has no classification head");
  const Manifest manifest = load_manifest(config);
  const Split split = parse_split(split_name_arg);
  std::vector<const ManifestRecord*> records;
  for (const auto& r : manifest.records) {
    if (r.split == split) records.push_back(&r);
  }
  if (records.empty()) throw InputError("manifest has no " + split_name_arg + " records");

  ConformerModel<float> model(ckpt.model, ckpt.seed);
  restore_model(ckpt, model);
  ClassificationHead<float> head(ckpt.head->kind, ckpt.model.latent_dim, ckpt.head->num_classes,
                                 ckpt.seed);
  restore_head(ckpt, head);
  const auto examples = load_examples(manifest, records, ckpt.head->vocabulary);
  const dsp::LogmelExtractor extractor;
  const auto report = evaluate_examples(examples, model, head, extractor, config.eval_batch_size);
  ensure_dir(config.out_dir);
  write_eval_report(fs::path(config.out_dir) / "eval_report.json", report, ckpt.head->vocabulary);
  print_report(report);
}

void run_extract(const RunConfig& config, const fs::path& input, fs::path output) {
  ModelConfig arch = config.model;
  std::optional<Checkpoint> ckpt;
  if (!config.init_checkpoint.empty()) {
    ckpt = load_checkpoint(config.init_checkpoint);
    arch = reconcile_model(config, *ckpt, config.init_checkpoint);
  }
  ConformerModel<float> model(arch, config.seed);
  if (ckpt) restore_model(*ckpt, model);

  const auto spec = dsp::LogmelExtractor().extract(read_wav(input));
  NoGradScope<float> no_grad;
  Tensor<float> x({spec.num_frames, spec.num_bands}, spec.values);
  auto latent = model.feature_encode(x, spec.num_frames);
  ForwardContext<float> ctx;
  ctx.seq_len = latent.seq_len;
  auto c = model.context_encode(latent.z, ctx);
  if (output.empty()) output = fs::path(config.out_dir) / (input.stem().string() + ".npy");
  if (output.has_parent_path()) ensure_dir(output.parent_path());
  write_npy(output, c.shape(), c.values());
  std::cout << output.string() << ' ' << shape_string(c.shape()) << '\n';
}

bool run_gradcheck(const RunConfig& config) {
  GradSuiteOptions options;
  options.seed = config.seed;
  const auto rows = run_gradient_suite(options);
  bool ok = true;
  std::printf("%-34s %-8s %7s %12s %10s  %s\n", "case", "dtype", "coords", "max_rel_err",
              "threshold", "result");
  for (const auto& r : rows) {
    std::printf("%-34s %-8s %7zu %12.3e %10.1e  %s\n", r.name.c_str(), r.precision.c_str(),
                r.coordinates, r.max_relative_error, r.threshold, r.passed ? "PASS" : "FAIL");
    ok = ok && r.passed;
  }
  std::printf("%zu cases, %s\n", rows.size(), ok ? "all passed" : "FAILURES");
  return ok;
}

void run_paramcount(const RunConfig& config) { std::cout << param_count(config.model) << '\n'; }

void run_synthdata(const SynthConfig& config, const fs::path& out_dir) {
  const Manifest m = generate_synthetic_dataset(config, out_dir);
  std::cout << (out_dir / "manifest.tsv").string() << ' ' << m.records.size() << " clips\n";
}

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const Error& e) {
    std::cerr << "sslaudio: " << e.what() << '\n';
    switch (e.category()) {
      case ErrorCategory::kConfig: return 2;
      case ErrorCategory::kData: return 3;
      case ErrorCategory::kNumeric: return 4;
      case ErrorCategory::kIo: return 5;
      case ErrorCategory::kContract: return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "sslaudio: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace sslaudio::cli
