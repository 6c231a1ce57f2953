// Copyright (c) 2026 The chaindiar authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>

#include "chaindiar/losses.hpp"
#include "chaindiar/training.hpp"
#include "doctest.h"

using namespace chaindiar;

namespace {

Vector random_probs(Index t, Rng& rng, Scalar lo = 0.02, Scalar hi = 0.98) {
  Vector p(t);
  for (Index i = 0; i < t; ++i) p(i) = uniform_real(rng, lo, hi);
  return p;
}

BinaryMatrix random_refs(Index s, Index t, Rng& rng, Scalar density = 0.5) {
  BinaryMatrix m(s, t);
  for (Index r = 0; r < s; ++r)
    for (Index c = 0; c < t; ++c) m(r, c) = coin(rng, density) ? 1 : 0;
  return m;
}

// Independent enumeration oracle: no cost matrix, recomputes BCE per pair
// inside every permutation.
std::pair<Scalar, std::vector<int>> pit_enumeration_oracle(
    const std::vector<Vector>& z, const BinaryMatrix& refs) {
  const int n = static_cast<int>(z.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  Scalar best_cost = std::numeric_limits<Scalar>::infinity();
  do {
    Scalar c = 0.0;
    for (int s = 0; s < n; ++s)
      c += bce(z[static_cast<std::size_t>(s)],
               BinaryVector(
                   refs.row(perm[static_cast<std::size_t>(s)]).transpose()));
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best_cost / (static_cast<Scalar>(n) *
                       static_cast<Scalar>(z[0].size())),
          best};
}

}  // namespace

TEST_CASE("bce basics") {
  // near-perfect prediction
  BinaryVector ones = BinaryVector::Ones(16);
  Vector p = Vector::Constant(16, 1.0 - 1e-9);
  CHECK(bce(p, ones) < 1e-5);

  // maximum-entropy value: T * ln 2
  Vector half = Vector::Constant(10, 0.5);
  BinaryVector y(10);
  for (Index t = 0; t < 10; ++t) y(t) = t % 2;
  CHECK(bce(half, y) == doctest::Approx(10.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("bce matches a per-element summation oracle to 1e-12") {
  Rng rng(1);
  Vector p = random_probs(64, rng);
  BinaryVector y(64);
  for (Index t = 0; t < 64; ++t) y(t) = coin(rng, 0.5) ? 1 : 0;
  Scalar oracle = 0.0;
  for (Index t = 0; t < 64; ++t)
    oracle += y(t) ? -std::log(p(t)) : -std::log(1.0 - p(t));
  CHECK(bce(p, y) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("bce clamps out-of-range probabilities instead of failing") {
  Vector p(3);
  p << -0.5, 0.5, 1.5;
  BinaryVector y(3);
  y << 1, 1, 0;  // confident and wrong at both ends
  const Scalar got = bce(p, y);
  CHECK(std::isfinite(got));
  CHECK(got == doctest::Approx(-2.0 * std::log(1e-7) - std::log(0.5)));
}

TEST_CASE("subtask_loss: K = 0 and total-drop edge cases") {
  CHECK(subtask_loss({}, BinaryMatrix(0, 0), {}) == 0.0);

  Rng rng(2);
  std::vector<Vector> v = {random_probs(32, rng)};
  BinaryMatrix refs = random_refs(1, 32, rng);
  AdaptationPolicy drop_all;
  drop_all.frame_drop_ratio = 1.0;
  drop_all.subtask_weight = 0.1;
  Rng drop_rng(3);
  CHECK(subtask_loss(v, refs, {SubtaskKind::SAD}, &drop_all, &drop_rng) ==
        0.0);
}

TEST_CASE("subtask_loss drop ratio 0.7 keeps about 30% of frames") {
  const Index t_len = 10000;
  Vector p = Vector::Constant(t_len, 0.6);
  BinaryMatrix refs = BinaryMatrix::Ones(1, t_len);
  AdaptationPolicy policy;  // 0.7 / 0.1 defaults
  Rng rng(4);
  const Scalar loss =
      subtask_loss({p}, refs, {SubtaskKind::SAD}, &policy, &rng);
  // every kept frame contributes -log(0.6)/T, scaled by the 0.1 weight
  const Scalar kept_fraction =
      loss / (policy.subtask_weight * -std::log(0.6));
  CHECK(kept_fraction > 0.28);
  CHECK(kept_fraction < 0.32);
}

TEST_CASE("subtask_loss neutral policy equals no policy") {
  Rng rng(5);
  std::vector<Vector> v = {random_probs(40, rng), random_probs(40, rng)};
  BinaryMatrix refs = random_refs(2, 40, rng);
  AdaptationPolicy neutral;
  neutral.frame_drop_ratio = 0.0;
  neutral.subtask_weight = 1.0;
  const std::vector<SubtaskKind> kinds = {SubtaskKind::SAD, SubtaskKind::OD};
  Rng unused(0);
  CHECK(subtask_loss(v, refs, kinds, &neutral, &unused) ==
        subtask_loss(v, refs, kinds));
}

TEST_CASE("pit_loss: single speaker and crossed assignment") {
  Rng rng(6);
  Vector z = random_probs(20, rng);
  BinaryMatrix ref = random_refs(1, 20, rng);
  auto [loss, perm] = pit_loss({z}, ref);
  CHECK(perm == std::vector<int>{0});
  CHECK(loss == doctest::Approx(bce(z, BinaryVector(ref.row(0).transpose())) /
                                20.0));

  // z1 matches ref2, z2 matches ref1
  BinaryMatrix refs(2, 4);
  refs << 1, 1, 0, 0,
          0, 0, 1, 1;
  Vector z1(4), z2(4);
  z1 << 0.01, 0.01, 0.99, 0.99;  // looks like ref row 1
  z2 << 0.99, 0.99, 0.01, 0.01;  // looks like ref row 0
  auto [xloss, xperm] = pit_loss({z1, z2}, refs);
  CHECK(xperm == std::vector<int>{1, 0});
  CHECK(xloss < 0.02);
}

TEST_CASE("pit_loss equals the enumeration oracle bit-exactly, S = 4") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const Index t_len = 16;
    std::vector<Vector> z;
    for (int s = 0; s < 4; ++s) z.push_back(random_probs(t_len, rng));
    BinaryMatrix refs = random_refs(4, t_len, rng);
    auto [loss, perm] = pit_loss(z, refs);
    auto [oracle_loss, oracle_perm] = pit_enumeration_oracle(z, refs);
    REQUIRE(loss == oracle_loss);  // bit-exact
    REQUIRE(perm == oracle_perm);
  }
}

TEST_CASE("pit_loss is invariant under permuting the reference rows") {
  Rng rng(8);
  const Index t_len = 12;
  std::vector<Vector> z;
  for (int s = 0; s < 3; ++s) z.push_back(random_probs(t_len, rng));
  BinaryMatrix refs = random_refs(3, t_len, rng);

  std::vector<int> shuffle_map = {2, 0, 1};
  BinaryMatrix shuffled(3, t_len);
  for (int r = 0; r < 3; ++r)
    shuffled.row(r) = refs.row(shuffle_map[static_cast<std::size_t>(r)]);

  auto [l1, p1] = pit_loss(z, refs);
  auto [l2, p2] = pit_loss(z, shuffled);
  CHECK(l1 == l2);
  // argmin composes: shuffled[p2[s]] is the same row as refs[p1[s]]
  for (int s = 0; s < 3; ++s)
    CHECK(shuffle_map[static_cast<std::size_t>(
              p2[static_cast<std::size_t>(s)])] ==
          p1[static_cast<std::size_t>(s)]);
}

TEST_CASE("pit_loss never beats the identity assignment") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(uniform_int(rng, 4));
    const Index t_len = 10;
    std::vector<Vector> z;
    for (int s = 0; s < n; ++s) z.push_back(random_probs(t_len, rng));
    BinaryMatrix refs = random_refs(n, t_len, rng);
    Scalar identity = 0.0;
    for (int s = 0; s < n; ++s)
      identity += bce(z[static_cast<std::size_t>(s)],
                      BinaryVector(refs.row(s).transpose()));
    identity /= static_cast<Scalar>(n) * static_cast<Scalar>(t_len);
    CHECK(pit_loss(z, refs).first <= identity);
  }
}

TEST_CASE("pit_loss rejects more than 8 speakers") {
  std::vector<Vector> z(9, Vector::Constant(4, 0.5));
  BinaryMatrix refs = BinaryMatrix::Zero(9, 4);
  CHECK_THROWS_WITH_AS(pit_loss(z, refs), "exhaustive PIT limit", DataError);
}

TEST_CASE("appending the stop row to a confident stop never hurts") {
  Rng rng(10);
  const Index t_len = 16;
  BinaryMatrix refs = random_refs(2, t_len, rng);
  std::vector<Vector> z;
  for (int s = 0; s < 2; ++s) {
    Vector p(t_len);
    for (Index t = 0; t < t_len; ++t)
      p(t) = refs(s, t) ? uniform_real(rng, 0.9, 0.99)
                        : uniform_real(rng, 0.01, 0.1);
    z.push_back(p);
  }
  const Scalar base = pit_loss(z, refs).first;

  BinaryMatrix padded = BinaryMatrix::Zero(3, t_len);
  padded.topRows(2) = refs;
  std::vector<Vector> z3 = z;
  z3.push_back(Vector::Constant(t_len, 0.01));  // stop step almost silent
  CHECK(pit_loss(z3, padded).first <= base);
}

TEST_CASE("two_stage_pit: S = 1 exact total and stop-row padding") {
  ModelConfig cfg;
  cfg.n_blocks = 1;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.input_dim = 6;
  cfg.subtasks = {SubtaskKind::SAD};
  cfg.max_speakers = 2;
  Rng rng(11);
  ParameterStore store = ParameterStore::init(cfg, rng);
  Matrix x = Matrix::Random(6, 10);
  BinaryMatrix refs = random_refs(1, 10, rng);

  ad::Tape tape;
  ParamVars pv = stage_params(tape, store);
  TwoStageResult r = two_stage_pit(tape, pv, x, refs, store, cfg);
  CHECK(r.breakdown.total == r.breakdown.l_sub + r.breakdown.l_pit);
  CHECK(r.breakdown.best_perm.size() == 2);  // one real row + stop row
  CHECK(r.outputs.speaker_probs.size() == 2);
  CHECK(r.speaker_targets.rows() == 2);
}

TEST_CASE("two_stage_pit substitution consistency, K = 0") {
  // when pass-1 decisions equal the permuted references, pass 2 reproduces
  // pass 1 bit for bit
  ModelConfig cfg;
  cfg.n_blocks = 1;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.input_dim = 6;
  cfg.max_speakers = 2;  // no room for a stop row beyond S = 2
  Rng rng(12);
  ParameterStore store = ParameterStore::init(cfg, rng);
  Matrix x = Matrix::Random(6, 9);

  ad::Tape free_tape(false);
  ParamVars free_pv = stage_params(free_tape, store);
  ChainOutputs free_run = forward(free_tape, free_pv, x, cfg, 2);
  BinaryMatrix refs(2, 9);
  refs.row(0) = free_run.speaker_decisions[0].transpose();
  refs.row(1) = free_run.speaker_decisions[1].transpose();

  ad::Tape tape;
  ParamVars pv = stage_params(tape, store);
  TwoStageResult r = two_stage_pit(tape, pv, x, refs, store, cfg);
  CHECK(r.breakdown.best_perm == std::vector<int>{0, 1});
  for (std::size_t s = 0; s < 2; ++s)
    CHECK((r.outputs.speaker_probs[s] - free_run.speaker_probs[s])
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("two_stage_pit gradients flow only through pass 2") {
  ModelConfig cfg;
  cfg.n_blocks = 1;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.input_dim = 6;
  cfg.subtasks = {SubtaskKind::SAD};
  cfg.max_speakers = 3;
  Rng rng(13);
  ParameterStore store = ParameterStore::init(cfg, rng);
  Matrix x = Matrix::Random(6, 8);
  BinaryMatrix refs = random_refs(2, 8, rng);

  // gradients via two_stage_pit
  ParameterStore via_two_stage = store;
  {
    ad::Tape tape;
    ParamVars pv = stage_params(tape, store);
    TwoStageResult r = two_stage_pit(tape, pv, x, refs, store, cfg);
    via_two_stage.zero_grads();
    backward(tape, r.total, pv, via_two_stage);
  }

  // oracle: teacher-forced pass with the same fixed permutation, no pass 1
  // on the gradient tape at all
  ParameterStore via_fixed = store;
  {
    ad::Tape scratch(false);
    ParamVars spv = stage_params(scratch, store);
    ChainOutputs pass1 = forward(scratch, spv, x, cfg, 3);
    BinaryMatrix padded = BinaryMatrix::Zero(3, 8);
    padded.topRows(2) = refs;
    auto perm = pit_loss(pass1.speaker_probs, padded).second;

    ad::Tape tape;
    ParamVars pv = stage_params(tape, store);
    TeacherForcing tf;
    tf.subtask_refs = BinaryMatrix(1, 8);
    tf.subtask_refs.row(0) = derive_sad(refs).transpose();
    tf.speaker_refs = BinaryMatrix(3, 8);
    for (int s = 0; s < 3; ++s)
      tf.speaker_refs.row(s) = padded.row(perm[static_cast<std::size_t>(s)]);
    ChainOutputs out = forward(tape, pv, x, cfg, 3, &tf);

    Matrix ones = Matrix::Ones(1, 8);
    auto target_row = [&](const BinaryMatrix& m, int r) {
      Matrix t(1, 8);
      for (Index c = 0; c < 8; ++c) t(0, c) = m(r, c);
      return t;
    };
    ad::Var l_sub = tape.scale(
        tape.bce_sum(out.subtask_prob_vars[0], target_row(tf.subtask_refs, 0),
                     ones),
        1.0 / 8.0);
    ad::Var l_pit;
    for (int s = 0; s < 3; ++s) {
      ad::Var term = tape.bce_sum(
          out.speaker_prob_vars[static_cast<std::size_t>(s)],
          target_row(tf.speaker_refs, s), ones);
      l_pit = s == 0 ? term : tape.add(l_pit, term);
    }
    l_pit = tape.scale(l_pit, 1.0 / 24.0);
    via_fixed.zero_grads();
    backward(tape, tape.add(l_sub, l_pit), pv, via_fixed);
  }

  for (const auto& [name, g] : via_two_stage.grads)
    CHECK((g - via_fixed.grads.at(name)).cwiseAbs().maxCoeff() == 0.0);
}
