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

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chaindiar {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using BinaryVector = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Frame-synchronous acoustic features, one column per frame.
struct FeatureMatrix {
  Matrix data;                   // F x T
  Scalar frame_shift_s = 0.01;

  Index dim() const { return data.rows(); }
  Index frames() const { return data.cols(); }
};

/// Per-speaker binary speech activity, one row per speaker, one column per
/// 10 ms frame (or whatever frame_shift_s says). Zero rows means "no
/// speakers", which is a legal state.
struct ActivityMatrix {
  BinaryMatrix rows;             // S x T
  Scalar frame_shift_s = 0.01;

  Index speakers() const { return rows.rows(); }
  Index frames() const { return rows.cols(); }
};

/// Malformed or unusable input data. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (NaN gradients, diverging loss). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace chaindiar
