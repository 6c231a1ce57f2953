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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chaindiar/autodiff.hpp"
#include "chaindiar/features.hpp"
#include "chaindiar/labels.hpp"
#include "chaindiar/rng.hpp"
#include "chaindiar/types.hpp"

namespace chaindiar {

/// conditional_chain decodes subtasks then speakers along one LSTM chain,
/// each step conditioned on the previous step's activity. parallel_multitask
/// keeps a separate task-specific LSTM for the subtask chain and removes the
/// subtask-to-speaker conditioning (both chains start from zero).
enum class ModelVariant { conditional_chain, parallel_multitask };

std::string to_string(ModelVariant v);
ModelVariant variant_from_string(const std::string& s);

struct ModelConfig {
  int n_blocks = 4;
  int d_model = 256;
  int n_heads = 4;
  int input_dim = 345;
  std::vector<SubtaskKind> subtasks;  // chain order; may be empty (K = 0)
  int max_speakers = 4;
  ModelVariant variant = ModelVariant::conditional_chain;
  bool positional_encoding = false;  // EEND-family encoders omit it

  int n_subtasks() const { return static_cast<int>(subtasks.size()); }
  /// Index of SAD in the subtask list, or -1.
  int sad_index() const;
  void validate() const;
};

/// Named trainable tensors plus paired gradient buffers.
struct ParameterStore {
  std::map<std::string, Matrix> params;
  std::map<std::string, Matrix> grads;

  static ParameterStore init(const ModelConfig& cfg, Rng& rng);

  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  void zero_grads();
  std::size_t scalar_count() const;
};

/// Parameters staged onto a tape, keyed by name.
using ParamVars = std::map<std::string, ad::Var>;
ParamVars stage_params(ad::Tape& tape, const ParameterStore& store);

/// Per-block, per-head attention weight matrices (T x T), for inspection.
struct EncoderProbe {
  std::vector<std::vector<ad::Var>> attention;
};

/// Shared Transformer encoder: input projection then n_blocks pre-norm
/// blocks (self-attention + position-wise feed-forward, residual around
/// each), final layer norm. Returns the D x T embedding matrix E.
ad::Var encode(ad::Tape& tape, const ParamVars& pv, const Matrix& x,
               const ModelConfig& cfg, EncoderProbe* probe = nullptr);

/// f(.): maps the binary condition c to a D x T matrix, column t equal to
/// w * c_t + b. `prefix` selects the projection ("cond" or "subcond").
ad::Var embed_condition(ad::Tape& tape, const ParamVars& pv,
                        const BinaryVector& condition,
                        const std::string& prefix = "cond");

/// LSTM state along the chain axis; both matrices are D x T.
struct ChainState {
  ad::Var hidden;
  ad::Var cell;
};

/// One LSTM update along the chain axis, applied to every frame
/// independently. Input is [E; f(condition)] (2D x T). Returns the new
/// state; .hidden is H_l. `prefix` selects the LSTM ("chain"/"subchain")
/// and `cond_prefix` its condition projection.
ChainState chain_step(ad::Tape& tape, const ParamVars& pv, ad::Var embeddings,
                      const BinaryVector& condition, const ChainState& state,
                      const std::string& prefix = "chain",
                      const std::string& cond_prefix = "cond");

/// Outputs of one forward pass. Probabilities are strictly inside (0, 1);
/// decisions are threshold(probs) in free-running mode and the forced
/// references in teacher-forced mode.
struct ChainOutputs {
  std::vector<Vector> subtask_probs;          // K entries, length T
  std::vector<Vector> speaker_probs;          // one per decoded step
  std::vector<BinaryVector> subtask_decisions;
  std::vector<BinaryVector> speaker_decisions;
  // Tape handles for loss construction (valid on the tape passed in).
  std::vector<ad::Var> subtask_prob_vars;
  std::vector<ad::Var> speaker_prob_vars;
};

/// References used for teacher forcing. subtask_refs is K x T (chain
/// order), speaker_refs is S x T in the order the chain should see them.
struct TeacherForcing {
  BinaryMatrix subtask_refs;
  BinaryMatrix speaker_refs;
};

/// Runs the chain for all K subtask steps and n_speaker_steps speaker
/// steps. Conditions come from the previous step's decision (free running)
/// or reference (teacher forcing); the first subtask sees zeros and the
/// first speaker sees the last subtask's activity (zeros when K = 0 or in
/// the parallel_multitask variant).
ChainOutputs forward(ad::Tape& tape, const ParamVars& pv, const Matrix& x,
                     const ModelConfig& cfg, int n_speaker_steps,
                     const TeacherForcing* tf = nullptr,
                     EncoderProbe* probe = nullptr);

/// Generic stop-condition loop: decodes rows step_fn(1), step_fn(2), ...
/// until a row thresholds to all-zero or s_max steps were taken. Returns
/// the number of non-all-zero rows emitted; every decoded row (including
/// a stopping all-zero one) is appended to *rows when given.
template <typename StepFn>
int run_speaker_loop(StepFn&& step_fn, int s_max,
                     std::vector<BinaryVector>* rows = nullptr) {
  for (int s = 1; s <= s_max; ++s) {
    BinaryVector row = step_fn(s);
    if (rows) rows->push_back(row);
    if ((row.array() == 0).all()) return s - 1;
  }
  return s_max;
}

struct InferResult {
  ChainOutputs outputs;
  int n_speakers = 0;       // estimated speaker count
  BinaryMatrix activity;    // n_speakers x T, after optional SAD override
};

/// Free-running inference with the stop condition. With sad_override and
/// SAD among the subtasks, frames the SAD decision marks as non-speech are
/// forced to zero in every emitted speaker row.
InferResult infer(const Matrix& x, const ParameterStore& store,
                  const ModelConfig& cfg, bool sad_override = false);

// --- checkpoint container -------------------------------------------------
// Layout: 10-byte magic "CHAINDIAR1", little-endian u64 header length, JSON
// header (model + feature configs, tensor directory, optional extra
// metadata), then all tensor payloads as row-major little-endian f64.

struct Checkpoint {
  ModelConfig model;
  FeatureConfig features;
  ParameterStore store;
  std::map<std::string, Matrix> extra_tensors;  // optimizer state etc.
  std::map<std::string, std::string> extra_meta;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace chaindiar
