// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using namespace sslaudio;

struct SharedFlags {
  std::optional<std::string> config_path;
  CliOverrides overrides;
  std::optional<std::string> preset;
  std::optional<std::string> out_dir;
  std::optional<std::string> init_checkpoint;
  std::optional<std::string> manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> max_steps;
  bool deterministic = false;

  void add_to(CLI::App* cmd, bool training) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--preset", preset, "model preset (cf_S, cf_L)");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--init-checkpoint", init_checkpoint, "checkpoint directory to start from");
    cmd->add_option("--manifest", manifest, "TSV manifest: path, labels, split");
    if (training) {
      cmd->add_option("--max-steps", max_steps, "stop after this update number");
      cmd->add_flag("--deterministic", deterministic, "reproducible logs (wall_ms = 0)");
    }
  }

  RunConfig resolve() {
    overrides.preset = preset;
    overrides.out_dir = out_dir;
    overrides.init_checkpoint = init_checkpoint;
    overrides.manifest = manifest;
    overrides.seed = seed;
    overrides.max_steps = max_steps;
    overrides.deterministic = deterministic;
    return load_run_config(config_path, overrides);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised conformer audio representations"};
  app.require_subcommand(1);
  SharedFlags flags;

  auto* pretrain = app.add_subcommand("pretrain", "contrastive pretraining on unlabeled clips");
  flags.add_to(pretrain, true);

  auto* finetune = app.add_subcommand("finetune", "train a classification head on labeled clips");
  flags.add_to(finetune, true);
  std::optional<std::string> head;
  bool from_scratch = false;
  finetune->add_option("--head", head, "linear-softmax-pool or mean-pool");
  finetune->add_flag("--from-scratch", from_scratch, "ignore --init-checkpoint");

  auto* evaluate = app.add_subcommand("evaluate", "mAP and accuracy of a fine-tuned checkpoint");
  flags.add_to(evaluate, false);
  std::string split = "eval";
  evaluate->add_option("--split", split, "train, valid or eval");

  auto* extract = app.add_subcommand("extract", "context embeddings of one WAV file as .npy");
  flags.add_to(extract, false);
  std::string input, output;
  extract->add_option("--input", input, "16 kHz mono WAV")->required();
  extract->add_option("--output", output, "destination .npy (default <out-dir>/<stem>.npy)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  flags.add_to(gradcheck, false);

  auto* paramcount = app.add_subcommand("paramcount", "trainable parameter count of a model");
  flags.add_to(paramcount, false);

  auto* synth = app.add_subcommand("synthdata", "write a synthetic tone dataset and manifest");
  SynthConfig synth_config;
  std::string synth_out = "synth";
  bool no_modulation = false;
  synth->add_option("--out-dir", synth_out, "output directory");
  synth->add_option("--seed", synth_config.seed);
  synth->add_option("--num-classes", synth_config.num_classes);
  synth->add_option("--clips-per-class", synth_config.clips_per_class);
  synth->add_option("--clip-seconds", synth_config.clip_seconds);
  synth->add_option("--min-labels", synth_config.min_labels);
  synth->add_option("--max-labels", synth_config.max_labels);
  synth->add_option("--min-snr-db", synth_config.min_snr_db);
  synth->add_option("--max-snr-db", synth_config.max_snr_db);
  synth->add_option("--eval-fraction", synth_config.eval_fraction);
  synth->add_flag("--no-modulation", no_modulation, "constant-amplitude tones");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      synth_config.amplitude_modulation = !no_modulation;
      cli::run_synthdata(synth_config, synth_out);
      return 0;
    }
    if (*finetune && head) flags.overrides.head = head;
    const RunConfig config = flags.resolve();
    if (*pretrain) cli::run_pretrain(config);
    if (*finetune) cli::run_finetune(config, from_scratch);
    if (*evaluate) cli::run_evaluate(config, split);
    if (*extract) cli::run_extract(config, input, output);
    if (*paramcount) cli::run_paramcount(config);
    if (*gradcheck) return cli::run_gradcheck(config) ? 0 : 4;
    return 0;
  } catch (...) {
    return cli::exit_code_for_current_exception();
  }
}
