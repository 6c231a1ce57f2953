// Copyright (c) 2026 The chaindiar authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Single-binary front end: simulate | train | adapt | infer | score.
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chaindiar/features.hpp"
#include "chaindiar/io.hpp"
#include "chaindiar/labels.hpp"
#include "chaindiar/model.hpp"
#include "chaindiar/scoring.hpp"
#include "chaindiar/simulation.hpp"
#include "chaindiar/training.hpp"

namespace {

using namespace chaindiar;

struct SimulateArgs {
  std::string out_dir;
  int num_mixtures = 10;
  std::string speakers = "2";
  double duration_s = 90.0;
  double pause_scale_s = 3.5;
  double utt_min_s = 1.0;
  double utt_max_s = 5.0;
  int sample_rate = 8000;
  std::uint64_t seed = 1;
};

struct FeatureArgs {
  int n_mels = 23;
  int frame_length_ms = 25;
  int frame_shift_ms = 10;
  int context = 7;
  int subsample = 10;
};

struct ModelArgs {
  int blocks = 4;
  int d_model = 256;
  int heads = 4;
  std::string subtasks = "sad";
  int max_speakers = 4;
  std::string variant = "conditional_chain";
  bool positional_encoding = false;
};

struct TrainArgs {
  std::string manifest;
  std::string out_dir;
  std::string resume;
  int epochs = 10;
  int batch_size = 8;
  int chunk_frames = 500;
  double lr_scale = 0.05;
  int warmup = 200;
  double grad_clip = 5.0;
  std::uint64_t seed = 1;
};

struct AdaptArgs {
  std::string init_ckpt;
  double drop_ratio = 0.7;
  double subtask_weight = 0.1;
  std::string drop_subtasks = "sad";
};

struct InferArgs {
  std::string checkpoint;
  std::string wav;
  std::string file_id;
  std::string manifest;
  std::string out;
  bool sad_override = false;
  int max_speakers = 0;  // 0 keeps the checkpoint value
};

struct ScoreArgs {
  std::string ref;
  std::string hyp;
  double collar = 0.25;
  bool by_count = false;
};

std::vector<SubtaskKind> parse_subtasks(const std::string& spec) {
  std::vector<SubtaskKind> kinds;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item == "none") continue;
    kinds.push_back(subtask_from_string(item));
  }
  return kinds;
}

void parse_speaker_range(const std::string& spec, SimConfig& cfg) {
  const auto dash = spec.find('-');
  try {
    if (dash == std::string::npos) {
      cfg.n_speakers_min = cfg.n_speakers_max = std::stoi(spec);
    } else {
      cfg.n_speakers_min = std::stoi(spec.substr(0, dash));
      cfg.n_speakers_max = std::stoi(spec.substr(dash + 1));
    }
  } catch (const std::exception&) {
    throw DataError("bad speaker count spec: " + spec);
  }
}

ModelConfig model_config_from_args(const ModelArgs& margs,
                                   const FeatureArgs& fargs) {
  ModelConfig cfg;
  cfg.n_blocks = margs.blocks;
  cfg.d_model = margs.d_model;
  cfg.n_heads = margs.heads;
  cfg.input_dim = fargs.n_mels * (2 * fargs.context + 1);
  cfg.subtasks = parse_subtasks(margs.subtasks);
  cfg.max_speakers = margs.max_speakers;
  cfg.variant = variant_from_string(margs.variant);
  cfg.positional_encoding = margs.positional_encoding;
  cfg.validate();
  return cfg;
}

FeatureConfig feature_config_from_args(const FeatureArgs& fargs) {
  FeatureConfig cfg;
  cfg.n_mels = fargs.n_mels;
  cfg.frame_length_ms = fargs.frame_length_ms;
  cfg.frame_shift_ms = fargs.frame_shift_ms;
  cfg.context = fargs.context;
  cfg.subsample = fargs.subsample;
  return cfg;
}

void apply_seed_env(std::uint64_t& seed) {
  const char* env = std::getenv("CHAINDIAR_SEED");
  if (!env) return;
  try {
    seed = std::stoull(env);
  } catch (const std::exception&) {
    throw CLI::ValidationError("CHAINDIAR_SEED",
                               "must be an unsigned integer");
  }
}

int cmd_simulate(const SimulateArgs& args) {
  SimConfig cfg;
  parse_speaker_range(args.speakers, cfg);
  cfg.target_duration_s = args.duration_s;
  cfg.pause_scale_s = args.pause_scale_s;
  cfg.utterance_min_s = args.utt_min_s;
  cfg.utterance_max_s = args.utt_max_s;
  cfg.sample_rate_hz = args.sample_rate;
  cfg.seed = args.seed;

  std::filesystem::create_directories(args.out_dir);
  std::vector<ManifestEntry> manifest;
  for (int i = 0; i < args.num_mixtures; ++i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    Mixture mix = simulate_mixture(cfg, rng);
    char id[32];
    std::snprintf(id, sizeof(id), "mix_%04d", i);
    const std::string wav_path = args.out_dir + "/" + id + ".wav";
    const std::string rttm_path = args.out_dir + "/" + id + ".rttm";
    write_wav(wav_path, mix.waveform);
    write_rttm(rttm_path,
               activity_to_segments(mix.activity, mix.speaker_ids, id));
    manifest.push_back({id, wav_path, rttm_path});
  }
  write_manifest(args.out_dir + "/manifest.txt", manifest);
  std::cout << "wrote " << manifest.size() << " mixtures to " << args.out_dir
            << "\n";
  return 0;
}

int cmd_train(const TrainArgs& targs, const ModelArgs& margs,
              const FeatureArgs& fargs) {
  TrainConfig tcfg;
  tcfg.chunk_frames = targs.chunk_frames;
  tcfg.batch_size = targs.batch_size;
  tcfg.max_epochs = targs.epochs;
  tcfg.lr_scale = targs.lr_scale;
  tcfg.warmup_steps = targs.warmup;
  tcfg.grad_clip = targs.grad_clip;
  tcfg.seed = targs.seed;

  Checkpoint final = fit(read_manifest(targs.manifest),
                         feature_config_from_args(fargs),
                         model_config_from_args(margs, fargs), tcfg,
                         FitOptions{targs.out_dir, targs.resume});
  std::cout << "final checkpoint: " << targs.out_dir << "/final.ckpt ("
            << final.store.scalar_count() << " parameters)\n";
  return 0;
}

int cmd_adapt(const TrainArgs& targs, const AdaptArgs& aargs) {
  TrainConfig tcfg;
  tcfg.chunk_frames = targs.chunk_frames;
  tcfg.batch_size = targs.batch_size;
  tcfg.max_epochs = targs.epochs;
  tcfg.lr_scale = targs.lr_scale;
  tcfg.warmup_steps = targs.warmup;
  tcfg.grad_clip = targs.grad_clip;
  tcfg.seed = targs.seed;
  AdaptationPolicy policy;
  policy.frame_drop_ratio = aargs.drop_ratio;
  policy.subtask_weight = aargs.subtask_weight;
  policy.applies_to = parse_subtasks(aargs.drop_subtasks);
  tcfg.adaptation = policy;

  adapt(aargs.init_ckpt, read_manifest(targs.manifest), tcfg,
        FitOptions{targs.out_dir, ""});
  std::cout << "adapted checkpoint: " << targs.out_dir << "/final.ckpt\n";
  return 0;
}

int cmd_infer(const InferArgs& args) {
  if (args.wav.empty() == args.manifest.empty())
    throw CLI::ValidationError("infer",
                               "give exactly one of a wav path or --manifest");
  Checkpoint ckpt = load_checkpoint(args.checkpoint);
  ModelConfig cfg = ckpt.model;
  if (args.max_speakers > 0) cfg.max_speakers = args.max_speakers;

  std::vector<std::pair<std::string, std::string>> inputs;  // id, wav path
  if (!args.wav.empty()) {
    std::string id = args.file_id;
    if (id.empty()) id = std::filesystem::path(args.wav).stem().string();
    inputs.emplace_back(id, args.wav);
  } else {
    for (const auto& entry : read_manifest(args.manifest))
      inputs.emplace_back(entry.id, entry.wav_path);
  }

  std::vector<RttmSegment> hyp;
  for (const auto& [id, wav_path] : inputs) {
    const Waveform wav = read_wav(wav_path);
    const FeatureMatrix feats = extract_pipeline(wav, ckpt.features);
    InferResult res = infer(feats.data, ckpt.store, cfg, args.sad_override);
    ActivityMatrix activity;
    activity.rows = res.activity;
    activity.frame_shift_s = feats.frame_shift_s;
    std::vector<std::string> names;
    for (int s = 0; s < res.n_speakers; ++s)
      names.push_back("spk" + std::to_string(s + 1));
    auto segs = activity_to_segments(activity, names, id);
    hyp.insert(hyp.end(), segs.begin(), segs.end());
    std::cerr << id << ": " << res.n_speakers << " speakers, "
              << segs.size() << " segments\n";
  }
  write_rttm(args.out, hyp);
  return 0;
}

int cmd_score(const ScoreArgs& args) {
  const auto ref = read_rttm(args.ref);
  const auto hyp = read_rttm(args.hyp);
  DerReport total = der(ref, hyp, args.collar);
  std::cout << format_der_report(total);

  if (args.by_count) {
    auto per_file = der_per_file(ref, hyp, args.collar);
    std::map<std::string, int> ref_counts;
    std::map<std::string, std::set<std::string>> speakers;
    for (const auto& seg : ref) speakers[seg.file_id].insert(seg.speaker);
    for (const auto& [file_id, spk] : speakers)
      ref_counts[file_id] = static_cast<int>(spk.size());

    std::cout << "\nper reference speaker count:\n";
    std::cout << "speakers    DER(%)  scored(s)  files\n";
    std::map<int, int> file_tally;
    for (const auto& [file_id, count] : ref_counts) ++file_tally[count];
    for (const auto& [count, rep] : der_by_ref_count(per_file, ref_counts)) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%8d  %8.2f  %9.2f  %5d\n", count,
                    rep.der_pct(), rep.scored_speaker_time_s,
                    file_tally[count]);
      std::cout << buf;
    }

    std::vector<std::pair<int, int>> count_pairs;
    std::map<std::string, std::set<std::string>> hyp_speakers;
    for (const auto& seg : hyp) hyp_speakers[seg.file_id].insert(seg.speaker);
    for (const auto& [file_id, count] : ref_counts)
      count_pairs.emplace_back(
          count, static_cast<int>(hyp_speakers[file_id].size()));
    std::cout << "\n" << format_counting_report(counting_report(count_pairs));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subtask-first conditional chain speaker diarization"};
  app.name("chaindiar");
  app.set_config("--config", "", "read options from an INI file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  SimulateArgs sim;
  FeatureArgs feat;
  ModelArgs model;
  TrainArgs train;
  AdaptArgs adapt_args;
  InferArgs inf;
  ScoreArgs score;

  auto* sim_cmd = app.add_subcommand(
      "simulate", "generate parametric multi-speaker mixtures");
  sim_cmd->add_option("--out-dir", sim.out_dir, "output directory")
      ->required();
  sim_cmd->add_option("--num-mixtures", sim.num_mixtures, "mixtures to write")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--speakers", sim.speakers, "count or range, e.g. 1-4")
      ->capture_default_str();
  sim_cmd->add_option("--duration", sim.duration_s, "seconds per mixture")
      ->capture_default_str();
  sim_cmd
      ->add_option("--pause-scale", sim.pause_scale_s,
                   "mean silence gap per speaker, seconds")
      ->capture_default_str();
  sim_cmd->add_option("--utt-min", sim.utt_min_s, "shortest utterance, s")
      ->capture_default_str();
  sim_cmd->add_option("--utt-max", sim.utt_max_s, "longest utterance, s")
      ->capture_default_str();
  sim_cmd->add_option("--sample-rate", sim.sample_rate, "waveform rate, Hz")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "generator seed")
      ->capture_default_str();

  auto add_feature_flags = [&feat](CLI::App* cmd) {
    cmd->add_option("--n-mels", feat.n_mels, "mel filterbank size")
        ->capture_default_str();
    cmd->add_option("--frame-length", feat.frame_length_ms,
                    "analysis window, ms")
        ->capture_default_str();
    cmd->add_option("--frame-shift", feat.frame_shift_ms, "frame shift, ms")
        ->capture_default_str();
    cmd->add_option("--context", feat.context, "splice context frames")
        ->capture_default_str();
    cmd->add_option("--subsample", feat.subsample, "frame subsampling factor")
        ->capture_default_str();
  };
  auto add_train_flags = [&train](CLI::App* cmd) {
    cmd->add_option("--manifest", train.manifest, "training manifest")
        ->required();
    cmd->add_option("--out-dir", train.out_dir, "checkpoint directory")
        ->required();
    cmd->add_option("--epochs", train.epochs, "training epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--batch-size", train.batch_size, "chunks per step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--chunk-frames", train.chunk_frames,
                    "subsampled frames per chunk")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--lr-scale", train.lr_scale, "Noam schedule scale")
        ->capture_default_str();
    cmd->add_option("--warmup", train.warmup, "warmup steps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--grad-clip", train.grad_clip, "global gradient norm cap")
        ->capture_default_str();
    cmd->add_option("--seed", train.seed, "training seed")
        ->capture_default_str();
  };

  auto* train_cmd =
      app.add_subcommand("train", "train a model from a manifest");
  add_train_flags(train_cmd);
  add_feature_flags(train_cmd);
  train_cmd->add_option("--resume", train.resume, "checkpoint to resume from")
      ->capture_default_str();
  train_cmd->add_option("--blocks", model.blocks, "encoder blocks")
      ->capture_default_str();
  train_cmd->add_option("--d-model", model.d_model, "attention units")
      ->capture_default_str();
  train_cmd->add_option("--heads", model.heads, "attention heads")
      ->capture_default_str();
  train_cmd
      ->add_option("--subtasks", model.subtasks,
                   "comma list before the speaker chain: sad, od, or none")
      ->capture_default_str();
  train_cmd
      ->add_option("--max-speakers", model.max_speakers,
                   "speaker chain step budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd
      ->add_option("--variant", model.variant,
                   "conditional_chain or parallel_multitask")
      ->check(CLI::IsMember({"conditional_chain", "parallel_multitask"}))
      ->capture_default_str();
  train_cmd->add_flag("--positional-encoding", model.positional_encoding,
                      "add sinusoidal positions to the encoder input");

  auto* adapt_cmd = app.add_subcommand(
      "adapt", "continue training with subtask-loss dropping");
  add_train_flags(adapt_cmd);
  adapt_cmd->add_option("--init", adapt_args.init_ckpt, "starting checkpoint")
      ->required();
  adapt_cmd
      ->add_option("--drop-ratio", adapt_args.drop_ratio,
                   "frame drop probability for listed subtasks")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  adapt_cmd
      ->add_option("--subtask-weight", adapt_args.subtask_weight,
                   "multiplier on the subtask loss")
      ->capture_default_str();
  adapt_cmd
      ->add_option("--drop-subtasks", adapt_args.drop_subtasks,
                   "comma list of subtasks the dropping applies to")
      ->capture_default_str();

  auto* infer_cmd =
      app.add_subcommand("infer", "decode speaker activity to RTTM");
  infer_cmd->add_option("--checkpoint", inf.checkpoint, "model checkpoint")
      ->required();
  infer_cmd->add_option("wav", inf.wav, "input wav (16-bit mono PCM)");
  infer_cmd->add_option("--id", inf.file_id,
                        "file id for the RTTM (default: wav stem)");
  infer_cmd->add_option("--manifest", inf.manifest,
                        "batch mode: manifest of wavs to decode");
  infer_cmd->add_option("--out", inf.out, "hypothesis RTTM path")->required();
  infer_cmd->add_flag("--sad-override", inf.sad_override,
                      "zero speaker activity where the SAD subtask says "
                      "non-speech");
  infer_cmd
      ->add_option("--max-speakers", inf.max_speakers,
                   "cap on decoded speakers (0: use checkpoint)")
      ->capture_default_str();

  auto* score_cmd =
      app.add_subcommand("score", "diarization error rate between two RTTMs");
  score_cmd->add_option("--ref", score.ref, "reference RTTM")->required();
  score_cmd->add_option("--hyp", score.hyp, "hypothesis RTTM")->required();
  score_cmd->add_option("--collar", score.collar,
                        "no-score zone around reference boundaries, s")
      ->capture_default_str();
  score_cmd->add_flag("--by-count", score.by_count,
                      "also report DER per reference speaker count");

  for (CLI::App* sub : {sim_cmd, train_cmd, adapt_cmd, infer_cmd, score_cmd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    apply_seed_env(sim.seed);
    apply_seed_env(train.seed);
    std::cerr << "# resolved configuration\n" << app.config_to_str(true, false);
    if (sim_cmd->parsed()) return cmd_simulate(sim);
    if (train_cmd->parsed()) return cmd_train(train, model, feat);
    if (adapt_cmd->parsed()) return cmd_adapt(train, adapt_args);
    if (infer_cmd->parsed()) return cmd_infer(inf);
    if (score_cmd->parsed()) return cmd_score(score);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
