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

#include <optional>
#include <string>
#include <vector>

#include "chaindiar/io.hpp"
#include "chaindiar/losses.hpp"
#include "chaindiar/model.hpp"

namespace chaindiar {

struct TrainConfig {
  int chunk_frames = 500;     // post-subsampling
  int batch_size = 8;
  int max_epochs = 10;
  Scalar lr_scale = 0.05;     // Noam scale; 0 freezes the parameters
  int warmup_steps = 200;
  Scalar grad_clip = 5.0;
  std::uint64_t seed = 1;
  std::optional<AdaptationPolicy> adaptation;

  void validate() const;
};

/// Adam moments, shapes mirroring the parameter store.
struct OptimizerState {
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
  std::int64_t step = 0;

  static OptimizerState init(const ParameterStore& store);
};

/// Noam inverse-sqrt warmup: lr = scale * min(step^-1/2, step * warmup^-3/2).
Scalar noam_lr(const TrainConfig& cfg, std::int64_t step);

/// Runs the reverse pass and accumulates d loss / d theta into store.grads
/// for every staged parameter. Throws NumericError naming the first
/// parameter with a non-finite gradient.
void backward(ad::Tape& tape, ad::Var loss, const ParamVars& pv,
              ParameterStore& store);

/// One training sequence chunk.
struct TrainItem {
  std::string id;
  Matrix x;           // F x T features
  BinaryMatrix refs;  // S x T speaker activity at the feature frame rate
};

/// Front end + reference rasterization + chunking for a manifest.
/// Chunk boundaries never split a frame; chunk lengths sum to T.
std::vector<TrainItem> load_training_set(
    const std::vector<ManifestEntry>& manifest, const FeatureConfig& fcfg,
    int chunk_frames);

struct StepStats {
  LossBreakdown loss;        // averaged over the batch
  Scalar lr = 0.0;
  Scalar tf_accuracy = 0.0;  // teacher-forced thresholded frame accuracy
};

/// One optimizer step on a batch: batch-averaged gradients, global-norm
/// clipping, Adam with Noam warmup. Deterministic given the rng state.
/// Aborts with NumericError when the loss exceeds 1e6.
StepStats train_step(const std::vector<const TrainItem*>& batch,
                     ParameterStore& store, OptimizerState& opt,
                     const ModelConfig& mcfg, const TrainConfig& tcfg,
                     Rng& rng);

struct FitOptions {
  std::string out_dir;
  // continue a run from this checkpoint; model and feature configs then
  // come from the checkpoint, not the arguments
  std::string resume_path;
};

/// Full training loop: per-epoch shuffling (rng derived from (seed, epoch)
/// so resumed runs replay identically), per-epoch checkpoints
/// (epoch_NNN.ckpt), final.ckpt, and a deterministic metrics log
/// (metrics.log: step, l_sub, l_pit, total, lr, tf_acc). Returns the final
/// checkpoint.
Checkpoint fit(const std::vector<ManifestEntry>& manifest,
               const FeatureConfig& fcfg, const ModelConfig& mcfg,
               const TrainConfig& tcfg, const FitOptions& opts);

/// fit() starting from an existing checkpoint, with the adaptation policy
/// applied to the subtask loss. Model and feature configs come from the
/// checkpoint; mismatching parameter shapes are an error.
Checkpoint adapt(const std::string& init_checkpoint,
                 const std::vector<ManifestEntry>& manifest,
                 const TrainConfig& tcfg, const FitOptions& opts);

}  // namespace chaindiar
