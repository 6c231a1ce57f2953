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

#include <functional>
#include <vector>

#include "chaindiar/types.hpp"

namespace chaindiar::ad {

/// Handle to a node on a Tape.
struct Var {
  Index id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense matrices.
///
/// Ops append nodes; backward() seeds the (1x1) loss node with 1 and runs
/// the recorded closures in reverse order, accumulating exact derivatives.
/// A tape constructed with track_gradients = false only computes values
/// (used for free-running passes and inference).
class Tape {
 public:
  explicit Tape(bool track_gradients = true) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool tracking() const { return track_; }
  std::size_t size() const { return nodes_.size(); }

  Var leaf(Matrix value);

  const Matrix& value(Var v) const { return nodes_[check(v)].value; }
  /// Valid after backward(); zero matrix for nodes the loss does not reach.
  const Matrix& grad(Var v) const { return nodes_[check(v)].grad; }

  // --- elementwise and structural ops -----------------------------------
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);  // coefficient-wise product
  Var scale(Var a, Scalar c);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  /// bias is (m x 1), added to every column of a (m x n).
  Var add_col_broadcast(Var a, Var bias);
  Var vstack(Var a, Var b);
  Var rows(Var a, Index r0, Index n);

  // --- nonlinearities ----------------------------------------------------
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  /// Softmax along each row (attention weights over keys).
  Var softmax_rows(Var a);
  /// Per-column layer norm over the feature dimension; gamma/beta are
  /// (m x 1) and broadcast over columns. Epsilon 1e-5.
  Var layer_norm(Var x, Var gamma, Var beta);

  // --- reductions / losses -----------------------------------------------
  Var sum(Var a);  // 1x1
  /// Sum of element-wise binary cross-entropy against constant targets,
  /// weighted by a constant mask of the same shape. Probabilities are
  /// clamped to [1e-7, 1 - 1e-7]; clamped elements get zero gradient,
  /// matching the slope of the clamped function.
  Var bce_sum(Var p, const Matrix& targets, const Matrix& mask);

  /// Reverse pass from a scalar (1x1) node.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> backprop;  // empty for leaves / untracked
  };

  Index check(Var v) const {
    if (!v.valid() || v.id >= static_cast<Index>(nodes_.size()))
      throw std::logic_error("invalid tape var");
    return v.id;
  }

  Var push(Matrix value, std::function<void()> backprop);
  Matrix& g(Index id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Matrix& v(Index id) const {
    return nodes_[static_cast<std::size_t>(id)].value;
  }

  std::vector<Node> nodes_;
  bool track_;
};

}  // namespace chaindiar::ad
