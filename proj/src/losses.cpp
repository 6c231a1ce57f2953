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

#include "chaindiar/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chaindiar/labels.hpp"

namespace chaindiar {

namespace {
constexpr Scalar kBceEps = 1e-7;

Matrix row_matrix(const BinaryVector& y) {
  Matrix m(1, y.size());
  for (Index t = 0; t < y.size(); ++t) m(0, t) = static_cast<Scalar>(y(t));
  return m;
}
}  // namespace

Scalar bce(const Vector& p, const BinaryVector& y) {
  if (p.size() != y.size())
    throw DataError("bce: probability/target length mismatch");
  Scalar acc = 0.0;
  for (Index t = 0; t < p.size(); ++t) {
    const Scalar ph = std::clamp(p(t), kBceEps, 1.0 - kBceEps);
    const Scalar yt = static_cast<Scalar>(y(t));
    acc -= 1.0 * (yt * std::log(ph) + (1.0 - yt) * std::log(1.0 - ph));
  }
  return acc;
}

Scalar subtask_loss(const std::vector<Vector>& v, const BinaryMatrix& u_refs,
                    const std::vector<SubtaskKind>& kinds,
                    const AdaptationPolicy* policy, Rng* rng) {
  const int n_sub = static_cast<int>(v.size());
  if (u_refs.rows() != n_sub || kinds.size() != v.size())
    throw DataError("subtask_loss: reference row count mismatch");
  if (n_sub == 0) return 0.0;
  const Index t_len = v[0].size();

  Scalar acc = 0.0;
  for (int k = 0; k < n_sub; ++k) {
    const Vector& probs = v[static_cast<std::size_t>(k)];
    bool drop_this = false;
    if (policy && policy->frame_drop_ratio > 0.0) {
      drop_this = std::find(policy->applies_to.begin(),
                            policy->applies_to.end(),
                            kinds[static_cast<std::size_t>(k)]) !=
                  policy->applies_to.end();
      if (drop_this && !rng)
        throw DataError("frame dropping requires an rng");
    }
    for (Index t = 0; t < t_len; ++t) {
      if (drop_this && coin(*rng, policy->frame_drop_ratio)) continue;
      const Scalar ph = std::clamp(probs(t), kBceEps, 1.0 - kBceEps);
      const Scalar yt = static_cast<Scalar>(u_refs(k, t));
      acc -= yt * std::log(ph) + (1.0 - yt) * std::log(1.0 - ph);
    }
  }
  Scalar loss = acc / static_cast<Scalar>(t_len);
  if (policy) loss *= policy->subtask_weight;
  return loss;
}

std::pair<Scalar, std::vector<int>> pit_loss(const std::vector<Vector>& z,
                                             const BinaryMatrix& y_refs) {
  const int n = static_cast<int>(z.size());
  if (n < 1) throw DataError("pit_loss: need at least one speaker");
  if (y_refs.rows() != n)
    throw DataError("pit_loss: reference/output count mismatch");
  if (n > 8) throw DataError("exhaustive PIT limit");
  const Index t_len = z[0].size();

  // BCE decomposes per (output, reference) pair; precompute the cost matrix
  // and enumerate permutations over it.
  Matrix cost(n, n);
  for (int s = 0; s < n; ++s)
    for (int r = 0; r < n; ++r)
      cost(s, r) = bce(z[static_cast<std::size_t>(s)],
                       BinaryVector(y_refs.row(r).transpose()));

  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  Scalar best_cost = std::numeric_limits<Scalar>::infinity();
  do {
    Scalar c = 0.0;
    for (int s = 0; s < n; ++s) c += cost(s, perm[static_cast<std::size_t>(s)]);
    if (c < best_cost) {  // strict: lexicographically first argmin wins ties
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  return {best_cost / (static_cast<Scalar>(n) * static_cast<Scalar>(t_len)),
          best};
}

TwoStageResult two_stage_pit(ad::Tape& tape, const ParamVars& pv,
                             const Matrix& x,
                             const BinaryMatrix& speaker_refs,
                             const ParameterStore& store,
                             const ModelConfig& cfg,
                             const AdaptationPolicy* policy, Rng* rng) {
  const Index t_len = x.cols();
  const int n_ref = static_cast<int>(speaker_refs.rows());
  if (n_ref > cfg.max_speakers)
    throw DataError("more reference speakers than max_speakers");
  const int n_sub = cfg.n_subtasks();

  // Stop-row padding: one all-zero target after the last speaker, within
  // the max_speakers budget.
  const int n_steps = std::min(n_ref + 1, cfg.max_speakers);
  BinaryMatrix padded = BinaryMatrix::Zero(n_steps, t_len);
  padded.topRows(std::min(n_ref, n_steps)) =
      speaker_refs.topRows(std::min(n_ref, n_steps));

  // Pass 1: free running, no gradients; picks the permutation only.
  std::vector<int> best_perm;
  {
    ad::Tape scratch(false);
    ParamVars pv1 = stage_params(scratch, store);
    ChainOutputs pass1 = forward(scratch, pv1, x, cfg, n_steps);
    best_perm = pit_loss(pass1.speaker_probs, padded).second;
  }

  // Pass 2: teacher forcing on the permuted references.
  TeacherForcing tf;
  tf.subtask_refs = BinaryMatrix::Zero(n_sub, t_len);
  for (int k = 0; k < n_sub; ++k)
    tf.subtask_refs.row(k) =
        derive_subtask_ref(cfg.subtasks[static_cast<std::size_t>(k)],
                           speaker_refs)
            .transpose();
  tf.speaker_refs = BinaryMatrix::Zero(n_steps, t_len);
  for (int s = 0; s < n_steps; ++s)
    tf.speaker_refs.row(s) = padded.row(best_perm[static_cast<std::size_t>(s)]);

  TwoStageResult res;
  res.outputs = forward(tape, pv, x, cfg, n_steps, &tf);
  res.subtask_targets = tf.subtask_refs;
  res.speaker_targets = tf.speaker_refs;

  // L_Sub with optional frame dropping for the listed subtasks.
  const Matrix ones_row = Matrix::Ones(1, t_len);
  ad::Var l_sub_var;
  for (int k = 0; k < n_sub; ++k) {
    Matrix mask = ones_row;
    if (policy && policy->frame_drop_ratio > 0.0) {
      const SubtaskKind kind = cfg.subtasks[static_cast<std::size_t>(k)];
      const bool listed =
          std::find(policy->applies_to.begin(), policy->applies_to.end(),
                    kind) != policy->applies_to.end();
      if (listed) {
        if (!rng)
          throw DataError("frame dropping requires an rng");
        for (Index t = 0; t < t_len; ++t)
          if (coin(*rng, policy->frame_drop_ratio)) mask(0, t) = 0.0;
      }
    }
    ad::Var term = tape.bce_sum(res.outputs.subtask_prob_vars
                                    [static_cast<std::size_t>(k)],
                                row_matrix(BinaryVector(
                                    tf.subtask_refs.row(k).transpose())),
                                mask);
    l_sub_var = k == 0 ? term : tape.add(l_sub_var, term);
  }
  if (n_sub > 0) {
    l_sub_var = tape.scale(l_sub_var, 1.0 / static_cast<Scalar>(t_len));
    if (policy) l_sub_var = tape.scale(l_sub_var, policy->subtask_weight);
  } else {
    l_sub_var = tape.leaf(Matrix::Zero(1, 1));
  }

  // L_PIT on pass-2 outputs, assignment fixed by pass 1.
  ad::Var l_pit_var;
  for (int s = 0; s < n_steps; ++s) {
    ad::Var term = tape.bce_sum(
        res.outputs.speaker_prob_vars[static_cast<std::size_t>(s)],
        row_matrix(BinaryVector(tf.speaker_refs.row(s).transpose())),
        ones_row);
    l_pit_var = s == 0 ? term : tape.add(l_pit_var, term);
  }
  l_pit_var = tape.scale(
      l_pit_var, 1.0 / (static_cast<Scalar>(n_steps) * static_cast<Scalar>(t_len)));

  res.total = tape.add(l_sub_var, l_pit_var);
  res.breakdown.l_sub = tape.value(l_sub_var)(0, 0);
  res.breakdown.l_pit = tape.value(l_pit_var)(0, 0);
  res.breakdown.total = tape.value(res.total)(0, 0);
  res.breakdown.best_perm = best_perm;
  return res;
}

}  // namespace chaindiar
