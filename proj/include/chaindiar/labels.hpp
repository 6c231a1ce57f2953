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

#include <cmath>
#include <string>
#include <vector>

#include "chaindiar/types.hpp"

namespace chaindiar {

/// Subtasks decoded ahead of the speaker chain. The order of the list in a
/// model config defines the chain order.
enum class SubtaskKind { SAD, OD };

inline std::string to_string(SubtaskKind k) {
  return k == SubtaskKind::SAD ? "sad" : "od";
}

inline SubtaskKind subtask_from_string(const std::string& s) {
  if (s == "sad" || s == "SAD") return SubtaskKind::SAD;
  if (s == "od" || s == "OD") return SubtaskKind::OD;
  throw DataError("unknown subtask: " + s);
}

/// Speech activity reference: 1 where any speaker is active.
/// Zero speaker rows yield an all-zero vector.
template <typename Derived>
BinaryVector derive_sad(const Eigen::MatrixBase<Derived>& activity) {
  BinaryVector out = BinaryVector::Zero(activity.cols());
  for (Index t = 0; t < activity.cols(); ++t)
    for (Index s = 0; s < activity.rows(); ++s)
      if (activity(s, t)) {
        out(t) = 1;
        break;
      }
  return out;
}

/// Overlap reference: 1 where at least two speakers are active.
template <typename Derived>
BinaryVector derive_od(const Eigen::MatrixBase<Derived>& activity) {
  BinaryVector out = BinaryVector::Zero(activity.cols());
  for (Index t = 0; t < activity.cols(); ++t) {
    int n = 0;
    for (Index s = 0; s < activity.rows(); ++s) n += activity(s, t) ? 1 : 0;
    out(t) = n > 1 ? 1 : 0;
  }
  return out;
}

inline BinaryVector derive_subtask_ref(SubtaskKind kind,
                                       const BinaryMatrix& activity) {
  return kind == SubtaskKind::SAD ? derive_sad(activity)
                                  : derive_od(activity);
}

/// Strict comparison against 0.5: exactly 0.5 maps to 0.
template <typename Derived>
BinaryVector threshold(const Eigen::MatrixBase<Derived>& probs) {
  BinaryVector out(probs.size());
  for (Index t = 0; t < probs.size(); ++t) {
    const Scalar p = probs(t);
    if (std::isnan(p)) throw NumericError("NaN probability in threshold");
    out(t) = p > 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace chaindiar
