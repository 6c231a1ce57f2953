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

#include "chaindiar/autodiff.hpp"

#include <cmath>

namespace chaindiar::ad {

namespace {
constexpr Scalar kLnEps = 1e-5;   // layer norm variance epsilon
constexpr Scalar kBceEps = 1e-7;  // probability clamp for BCE
}  // namespace

Var Tape::push(Matrix value, std::function<void()> backprop) {
  Node n;
  n.value = std::move(value);
  if (track_) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<Index>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value) { return push(std::move(value), {}); }

Var Tape::add(Var a, Var b) {
  Matrix out = v(a.id) + v(b.id);
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, b, r] {
    g(a.id) += g(r.id);
    g(b.id) += g(r.id);
  });
}

Var Tape::sub(Var a, Var b) {
  Matrix out = v(a.id) - v(b.id);
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, b, r] {
    g(a.id) += g(r.id);
    g(b.id) -= g(r.id);
  });
}

Var Tape::cmul(Var a, Var b) {
  Matrix out = v(a.id).cwiseProduct(v(b.id));
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, b, r] {
    g(a.id) += g(r.id).cwiseProduct(v(b.id));
    g(b.id) += g(r.id).cwiseProduct(v(a.id));
  });
}

Var Tape::scale(Var a, Scalar c) {
  Matrix out = v(a.id) * c;
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out),
              [this, a, c, r] { g(a.id) += c * g(r.id); });
}

Var Tape::matmul(Var a, Var b) {
  Matrix out = v(a.id) * v(b.id);
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, b, r] {
    g(a.id).noalias() += g(r.id) * v(b.id).transpose();
    g(b.id).noalias() += v(a.id).transpose() * g(r.id);
  });
}

Var Tape::transpose(Var a) {
  Matrix out = v(a.id).transpose();
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out),
              [this, a, r] { g(a.id) += g(r.id).transpose(); });
}

Var Tape::add_col_broadcast(Var a, Var bias) {
  Matrix out = v(a.id).colwise() + Eigen::VectorXd(v(bias.id).col(0));
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, bias, r] {
    g(a.id) += g(r.id);
    g(bias.id).col(0) += g(r.id).rowwise().sum();
  });
}

Var Tape::vstack(Var a, Var b) {
  const Matrix& top = v(a.id);
  const Matrix& bot = v(b.id);
  Matrix out(top.rows() + bot.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bot.rows()) = bot;
  const Index na = top.rows(), nb = bot.rows();
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, b, na, nb, r] {
    g(a.id) += g(r.id).topRows(na);
    g(b.id) += g(r.id).bottomRows(nb);
  });
}

Var Tape::rows(Var a, Index r0, Index n) {
  Matrix out = v(a.id).middleRows(r0, n);
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, r0, n, r] {
    g(a.id).middleRows(r0, n) += g(r.id);
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = ((-v(a.id).array()).exp() + 1.0).inverse().matrix();
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, r] {
    const auto& y = v(r.id).array();
    g(a.id).array() += g(r.id).array() * y * (1.0 - y);
  });
}

Var Tape::tanh(Var a) {
  Matrix out = v(a.id).array().tanh().matrix();
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, r] {
    const auto& y = v(r.id).array();
    g(a.id).array() += g(r.id).array() * (1.0 - y * y);
  });
}

Var Tape::relu(Var a) {
  Matrix out = v(a.id).cwiseMax(0.0);
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, r] {
    g(a.id).array() +=
        g(r.id).array() * (v(a.id).array() > 0.0).cast<Scalar>();
  });
}

Var Tape::softmax_rows(Var a) {
  const Matrix& x = v(a.id);
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    ArrayXX e = (x.row(i).array() - x.row(i).maxCoeff()).exp();
    out.row(i) = e / e.sum();
  }
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, r] {
    const Matrix& y = v(r.id);
    const Matrix& go = g(r.id);
    for (Index i = 0; i < y.rows(); ++i) {
      const Scalar dot = go.row(i).dot(y.row(i));
      g(a.id).row(i).array() +=
          y.row(i).array() * (go.row(i).array() - dot);
    }
  });
}

Var Tape::layer_norm(Var x, Var gamma, Var beta) {
  const Matrix& in = v(x.id);
  const Index m = in.rows(), n = in.cols();
  Matrix xhat(m, n), out(m, n);
  Vector inv_std(n);
  for (Index j = 0; j < n; ++j) {
    const Scalar mu = in.col(j).mean();
    const Scalar var = (in.col(j).array() - mu).square().mean();
    inv_std(j) = 1.0 / std::sqrt(var + kLnEps);
    xhat.col(j) = (in.col(j).array() - mu) * inv_std(j);
    out.col(j) = xhat.col(j).cwiseProduct(v(gamma.id).col(0)) +
                 v(beta.id).col(0);
  }
  Var r{static_cast<Index>(nodes_.size())};
  if (!track_) return push(std::move(out), {});
  return push(std::move(out),
              [this, x, gamma, beta, r, xhat, inv_std] {
    const Matrix& go = g(r.id);
    const Index m2 = go.rows();
    g(beta.id).col(0) += go.rowwise().sum();
    g(gamma.id).col(0) += go.cwiseProduct(xhat).rowwise().sum();
    for (Index j = 0; j < go.cols(); ++j) {
      // dxhat = go .* gamma; dx = (dxhat - mean(dxhat)
      //         - xhat * mean(dxhat .* xhat)) * inv_std
      Vector dxhat = go.col(j).cwiseProduct(v(gamma.id).col(0));
      const Scalar mean_dxhat = dxhat.mean();
      const Scalar mean_dxhat_xhat =
          dxhat.cwiseProduct(xhat.col(j)).sum() / static_cast<Scalar>(m2);
      g(x.id).col(j).array() +=
          (dxhat.array() - mean_dxhat -
           xhat.col(j).array() * mean_dxhat_xhat) *
          inv_std(j);
    }
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = v(a.id).sum();
  Var r{static_cast<Index>(nodes_.size())};
  return push(std::move(out), [this, a, r] {
    g(a.id).array() += g(r.id)(0, 0);
  });
}

Var Tape::bce_sum(Var p, const Matrix& targets, const Matrix& mask) {
  const Matrix& prob = v(p.id);
  if (prob.rows() != targets.rows() || prob.cols() != targets.cols())
    throw DataError("bce: probability/target shape mismatch");
  Matrix out(1, 1);
  Scalar acc = 0.0;
  for (Index j = 0; j < prob.cols(); ++j)
    for (Index i = 0; i < prob.rows(); ++i) {
      const Scalar ph =
          std::clamp(prob(i, j), kBceEps, 1.0 - kBceEps);
      acc -= mask(i, j) * (targets(i, j) * std::log(ph) +
                           (1.0 - targets(i, j)) * std::log(1.0 - ph));
    }
  out(0, 0) = acc;
  Var r{static_cast<Index>(nodes_.size())};
  if (!track_) return push(std::move(out), {});
  return push(std::move(out), [this, p, targets, mask, r] {
    const Scalar go = g(r.id)(0, 0);
    const Matrix& prob = v(p.id);
    for (Index j = 0; j < prob.cols(); ++j)
      for (Index i = 0; i < prob.rows(); ++i) {
        const Scalar raw = prob(i, j);
        if (raw <= kBceEps || raw >= 1.0 - kBceEps) continue;
        g(p.id)(i, j) +=
            go * mask(i, j) * (raw - targets(i, j)) / (raw * (1.0 - raw));
      }
  });
}

void Tape::backward(Var loss) {
  if (!track_) throw std::logic_error("backward on a non-tracking tape");
  const Index last = check(loss);
  if (v(last).rows() != 1 || v(last).cols() != 1)
    throw std::logic_error("backward target must be 1x1");
  for (auto& n : nodes_)
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[static_cast<std::size_t>(last)].grad(0, 0) = 1.0;
  for (Index i = last; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backprop) n.backprop();
  }
}

}  // namespace chaindiar::ad
