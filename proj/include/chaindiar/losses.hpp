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

#include <utility>
#include <vector>

#include "chaindiar/model.hpp"
#include "chaindiar/rng.hpp"
#include "chaindiar/types.hpp"

namespace chaindiar {

struct LossBreakdown {
  Scalar l_sub = 0.0;
  Scalar l_pit = 0.0;
  Scalar total = 0.0;            // always exactly l_sub + l_pit
  std::vector<int> best_perm;    // output s is scored against ref best_perm[s]
};

/// Adaptation-time subtask-loss dropping: frames of the listed subtasks are
/// excluded from the loss independently with probability frame_drop_ratio,
/// and the resulting L_Sub is multiplied by subtask_weight.
struct AdaptationPolicy {
  Scalar frame_drop_ratio = 0.7;
  Scalar subtask_weight = 0.1;
  std::vector<SubtaskKind> applies_to = {SubtaskKind::SAD};
};

/// Element-wise binary cross-entropy summed over all elements.
/// Probabilities are clamped to [1e-7, 1 - 1e-7].
Scalar bce(const Vector& p, const BinaryVector& y);

/// L_Sub = (1/T) sum_k BCE(v_k, u_k), with optional frame dropping and
/// weighting. u_refs is K x T in chain order; kinds names each row so the
/// policy's applies_to list can be resolved. rng is only touched when a
/// policy with a positive drop ratio matches some subtask.
Scalar subtask_loss(const std::vector<Vector>& v, const BinaryMatrix& u_refs,
                    const std::vector<SubtaskKind>& kinds,
                    const AdaptationPolicy* policy = nullptr,
                    Rng* rng = nullptr);

/// L_PIT = (1/(S*T)) min over permutations of sum_s BCE(z_s, y_{perm_s}).
/// Exhaustive search, lexicographically smallest argmin on ties; S > 8
/// throws ("exhaustive PIT limit").
std::pair<Scalar, std::vector<int>> pit_loss(const std::vector<Vector>& z,
                                             const BinaryMatrix& y_refs);

/// Two-stage PIT objective on one sequence.
///
/// Pass 1 runs free (conditions are the model's own thresholded decisions)
/// and only selects the best permutation; pass 2 runs teacher-forced on the
/// permuted references and is the only pass gradients flow through.
/// References are padded with all-zero rows up to the decoded step count
/// (min(S + 1, max_speakers)) so the stop row is a real training target.
struct TwoStageResult {
  LossBreakdown breakdown;
  ChainOutputs outputs;          // pass-2 outputs, vars on `tape`
  ad::Var total;                 // scalar loss node on `tape`
  BinaryMatrix speaker_targets;  // permuted padded refs, chain order
  BinaryMatrix subtask_targets;  // derived refs, chain order
};
TwoStageResult two_stage_pit(ad::Tape& tape, const ParamVars& pv,
                             const Matrix& x,
                             const BinaryMatrix& speaker_refs,
                             const ParameterStore& store,
                             const ModelConfig& cfg,
                             const AdaptationPolicy* policy = nullptr,
                             Rng* rng = nullptr);

}  // namespace chaindiar
