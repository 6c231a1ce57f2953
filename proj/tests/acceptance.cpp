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

// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits with the number of hard failures. Criterion 7 is a
// soft comparison and reports without failing the run.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "chaindiar/features.hpp"
#include "chaindiar/labels.hpp"
#include "chaindiar/losses.hpp"
#include "chaindiar/model.hpp"
#include "chaindiar/scoring.hpp"
#include "chaindiar/simulation.hpp"
#include "chaindiar/training.hpp"

using namespace chaindiar;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail,
            bool soft = false) {
  const char* tag = pass ? "PASS" : (soft ? "REPORT" : "FAIL");
  if (!pass && !soft) ++g_failures;
  std::printf("[%s] criterion %2d: %s\n", tag, criterion, detail.c_str());
  std::fflush(stdout);
}

Vector random_probs(Index t, Rng& rng) {
  Vector p(t);
  for (Index i = 0; i < t; ++i) p(i) = uniform_real(rng, 0.02, 0.98);
  return p;
}

BinaryMatrix random_binary(Index s, Index t, Rng& rng, double density = 0.5) {
  BinaryMatrix m(s, t);
  for (Index r = 0; r < s; ++r)
    for (Index c = 0; c < t; ++c) m(r, c) = coin(rng, density) ? 1 : 0;
  return m;
}

// ---------------------------------------------------------------------- 1
void criterion_pit_exactness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  bool ok = true;
  std::string why;
  for (int trial = 0; trial < 500 && ok; ++trial) {
    const int s = 1 + static_cast<int>(uniform_int(rng, 5));
    const Index t_len = 32;
    std::vector<Vector> z;
    for (int i = 0; i < s; ++i) z.push_back(random_probs(t_len, rng));
    BinaryMatrix refs = random_binary(s, t_len, rng);

    auto [loss, perm] = pit_loss(z, refs);

    // independent oracle: recompute BCE per pair inside each permutation
    std::vector<int> idx(static_cast<std::size_t>(s));
    std::iota(idx.begin(), idx.end(), 0);
    Scalar best = std::numeric_limits<Scalar>::infinity();
    std::vector<int> best_perm = idx;
    do {
      Scalar c = 0.0;
      for (int i = 0; i < s; ++i)
        c += bce(z[static_cast<std::size_t>(i)],
                 BinaryVector(
                     refs.row(idx[static_cast<std::size_t>(i)]).transpose()));
      if (c < best) {
        best = c;
        best_perm = idx;
      }
    } while (std::next_permutation(idx.begin(), idx.end()));
    const Scalar oracle =
        best / (static_cast<Scalar>(s) * static_cast<Scalar>(t_len));

    if (loss != oracle || perm != best_perm) {
      ok = false;
      why = "mismatch at trial " + std::to_string(trial);
    }
    // returned permutation achieves the minimum
    Scalar achieved = 0.0;
    for (int i = 0; i < s; ++i)
      achieved += bce(z[static_cast<std::size_t>(i)],
                      BinaryVector(
                          refs.row(perm[static_cast<std::size_t>(i)])
                              .transpose()));
    achieved /= static_cast<Scalar>(s) * static_cast<Scalar>(t_len);
    if (achieved != loss) {
      ok = false;
      why = "returned permutation does not achieve the minimum";
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 10.0) {
    ok = false;
    why = "too slow";
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "PIT equals enumeration bit-exactly on 500 instances "
                "(%.1f s)%s%s",
                dt, ok ? "" : " - ", why.c_str());
  report(1, ok, buf);
}

// ---------------------------------------------------------------------- 2
void criterion_gradient_fidelity() {
  const auto t0 = Clock::now();
  ModelConfig cfg;
  cfg.n_blocks = 2;
  cfg.d_model = 32;
  cfg.n_heads = 4;
  cfg.input_dim = 20;
  cfg.subtasks = {SubtaskKind::SAD, SubtaskKind::OD};
  cfg.max_speakers = 3;  // two speakers plus the stop row

  Rng rng(202);
  ParameterStore store = ParameterStore::init(cfg, rng);
  const Index t_len = 16;
  Matrix x(cfg.input_dim, t_len);
  for (Index r = 0; r < x.rows(); ++r)
    for (Index c = 0; c < x.cols(); ++c) x(r, c) = uniform_real(rng, -1, 1);
  BinaryMatrix refs = random_binary(2, t_len, rng, 0.4);

  // fix the permutation with an unperturbed free-running pass
  TeacherForcing tf;
  {
    ad::Tape scratch(false);
    ParamVars spv = stage_params(scratch, store);
    ChainOutputs pass1 = forward(scratch, spv, x, cfg, 3);
    BinaryMatrix padded = BinaryMatrix::Zero(3, t_len);
    padded.topRows(2) = refs;
    auto perm = pit_loss(pass1.speaker_probs, padded).second;
    tf.subtask_refs = BinaryMatrix(2, t_len);
    tf.subtask_refs.row(0) = derive_sad(refs).transpose();
    tf.subtask_refs.row(1) = derive_od(refs).transpose();
    tf.speaker_refs = BinaryMatrix(3, t_len);
    for (int s = 0; s < 3; ++s)
      tf.speaker_refs.row(s) = padded.row(perm[static_cast<std::size_t>(s)]);
  }

  auto loss_at = [&](const ParameterStore& st) {
    ad::Tape tape(false);
    ParamVars pv = stage_params(tape, st);
    ChainOutputs out = forward(tape, pv, x, cfg, 3, &tf);
    Scalar l_sub = subtask_loss(out.subtask_probs, tf.subtask_refs,
                                cfg.subtasks);
    Scalar l_pit = 0.0;
    for (int s = 0; s < 3; ++s)
      l_pit += bce(out.speaker_probs[static_cast<std::size_t>(s)],
                   BinaryVector(tf.speaker_refs.row(s).transpose()));
    l_pit /= 3.0 * static_cast<Scalar>(t_len);
    return l_sub + l_pit;
  };

  ParameterStore grads = store;
  {
    ad::Tape tape;
    ParamVars pv = stage_params(tape, store);
    TwoStageResult r = two_stage_pit(tape, pv, x, refs, store, cfg);
    grads.zero_grads();
    backward(tape, r.total, pv, grads);
  }

  std::vector<std::string> names;
  for (const auto& [name, m] : store.params) names.push_back(name);
  const Scalar h = 1e-5;
  Scalar max_rel = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::string& name = names[uniform_int(rng, names.size())];
    const Matrix& m = store.at(name);
    const Index r = static_cast<Index>(uniform_int(rng, m.rows()));
    const Index c = static_cast<Index>(uniform_int(rng, m.cols()));
    ParameterStore plus = store, minus = store;
    plus.at(name)(r, c) += h;
    minus.at(name)(r, c) -= h;
    const Scalar fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
    const Scalar an = grads.grads.at(name)(r, c);
    // the 1e-6 floor keeps central-difference cancellation noise
    // (|L| * eps / h ~ 1e-11) from dominating coordinates whose true
    // derivative is zero, e.g. the shift-invariant attention key biases
    const Scalar denom = std::max({std::abs(fd), std::abs(an), 1e-6});
    max_rel = std::max(max_rel, std::abs(fd - an) / denom);
  }
  const double dt = seconds_since(t0);
  const bool ok = max_rel < 1e-4 && dt < 60.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "analytic vs central differences on 50 parameters: max "
                "relative error %.2e (%.1f s)",
                max_rel, dt);
  report(2, ok, buf);
}

// ---------------------------------------------------------------------- 3
void criterion_label_oracle() {
  Rng rng(303);
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const Index s = static_cast<Index>(uniform_int(rng, 8));
    const Index t_len = 1 + static_cast<Index>(uniform_int(rng, 64));
    BinaryMatrix a = random_binary(s, t_len, rng, 0.4);
    BinaryVector sad = derive_sad(a);
    BinaryVector od = derive_od(a);
    for (Index t = 0; t < t_len; ++t) {
      int count = 0;
      for (Index r = 0; r < s; ++r) count += a(r, t);
      if (sad(t) != (count >= 1 ? 1 : 0)) ok = false;
      if (od(t) != (count >= 2 ? 1 : 0)) ok = false;
      if (od(t) > sad(t)) ok = false;
    }
  }
  report(3, ok,
         "derive_sad/derive_od match brute force on 1000 matrices; "
         "od <= sad everywhere");
}

// ---------------------------------------------------------------------- 4
std::vector<RttmSegment> random_reference(const std::string& file, Rng& rng,
                                          int n_speakers, double dur_s) {
  std::vector<RttmSegment> segs;
  for (int s = 0; s < n_speakers; ++s) {
    double t = 0.0;
    while (true) {
      t += std::round(uniform_real(rng, 0.2, 3.0) * 100.0) / 100.0;
      const double len =
          std::round(uniform_real(rng, 0.5, 4.0) * 100.0) / 100.0;
      if (t >= dur_s) break;
      segs.push_back({file, t, std::min(len, dur_s - t),
                      "spk" + std::to_string(s + 1)});
      t += len;
    }
  }
  return segs;
}

void criterion_scorer_identities() {
  Rng rng(404);
  bool ok = true;
  std::string why;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    const int n = 1 + static_cast<int>(uniform_int(rng, 4));
    auto ref = random_reference("f" + std::to_string(trial), rng, n, 20.0);
    if (ref.empty()) continue;
    DerReport self = der(ref, ref, 0.25);
    if (self.der_pct() != 0.0) {
      ok = false;
      why = "self-score not zero";
    }
    auto hyp = random_reference("f" + std::to_string(trial), rng, 2, 20.0);
    if (!hyp.empty()) {
      DerReport rep = der(ref, hyp, 0.25);
      if (std::abs(rep.der_pct() - (rep.miss_pct() + rep.falarm_pct() +
                                    rep.confusion_pct())) >= 1e-9) {
        ok = false;
        why = "MI+FA+CF != DER";
      }
    }
  }

  // frozen reference rows through the formatter
  auto formatted_der = [](double mi, double fa, double cf) {
    DerReport rep;
    rep.miss_s = mi;
    rep.falarm_s = fa;
    rep.confusion_s = cf;
    rep.scored_speaker_time_s = 100.0;
    rep.scored_speech_time_s = 100.0;
    return format_der_report(rep);
  };
  if (formatted_der(4.22, 2.33, 1.98).find("8.53") == std::string::npos) {
    ok = false;
    why = "4.22+2.33+1.98 row did not format to 8.53";
  }
  if (formatted_der(4.11, 2.96, 1.74).find("8.81") == std::string::npos) {
    ok = false;
    why = "4.11+2.96+1.74 row did not format to 8.81";
  }
  report(4, ok,
         "der(ref,ref)=0 x100, MI+FA+CF=DER to 1e-9, reference row "
         "arithmetic reproduced" +
             (why.empty() ? "" : " - " + why));
}

// ---------------------------------------------------------------------- 5
void criterion_counting_report() {
  auto expand = [](const std::vector<std::tuple<int, int, int>>& cells) {
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [r, h, n] : cells)
      for (int i = 0; i < n; ++i) pairs.emplace_back(r, h);
    return pairs;
  };
  CountingReport a = counting_report(
      expand({{2, 2, 129}, {2, 3, 19}, {3, 2, 15}, {3, 3, 54}, {3, 4, 5},
              {4, 2, 2},  {4, 3, 12}, {4, 4, 6},  {5, 3, 2},  {5, 4, 3},
              {6, 3, 1},  {6, 4, 2}}));
  CountingReport b = counting_report(
      expand({{2, 2, 129}, {2, 3, 19}, {3, 2, 9}, {3, 3, 60}, {3, 4, 5},
              {4, 2, 1},  {4, 3, 14}, {4, 4, 5}, {5, 3, 1},  {5, 4, 4},
              {6, 3, 1},  {6, 4, 2}}));
  char acc_a[16], acc_b[16];
  std::snprintf(acc_a, sizeof(acc_a), "%.1f", 100.0 * a.accuracy);
  std::snprintf(acc_b, sizeof(acc_b), "%.1f", 100.0 * b.accuracy);
  const bool ok = std::string(acc_a) == "75.6" && std::string(acc_b) == "77.6";
  report(5, ok,
         std::string("counting accuracies ") + acc_a + "% and " + acc_b +
             "% match the frozen reference tables");
}

// ------------------------------------------------------------------- data
struct EvalSet {
  std::vector<TrainItem> chunks;
  std::vector<Matrix> full;
  std::vector<std::vector<RttmSegment>> refs;
};

EvalSet build_set(int n, std::uint64_t seed0, double dur,
                  const FeatureConfig& fcfg, int chunk_frames) {
  EvalSet set;
  SimConfig scfg;
  scfg.target_duration_s = dur;
  for (int i = 0; i < n; ++i) {
    scfg.seed = seed0 + static_cast<std::uint64_t>(i);
    Mixture mix = simulate_mixture(scfg);
    FeatureMatrix feats = extract_pipeline(mix.waveform, fcfg);
    char id[32];
    std::snprintf(id, sizeof(id), "mix_%05d", i);
    auto segs = activity_to_segments(mix.activity, mix.speaker_ids, id);
    set.refs.push_back(segs);
    FileActivity coarse =
        segments_to_activity(segs, feats.frame_shift_s, feats.frames());
    for (Index start = 0; start < feats.frames(); start += chunk_frames) {
      const Index len = std::min<Index>(chunk_frames, feats.frames() - start);
      TrainItem item;
      item.id = id;
      item.x = feats.data.middleCols(start, len);
      item.refs = coarse.activity.rows.middleCols(start, len);
      set.chunks.push_back(std::move(item));
    }
    set.full.push_back(feats.data);
  }
  return set;
}

struct TrainedModel {
  ParameterStore store;
  ModelConfig cfg;
  Scalar last_epoch_tf_acc = 0.0;
};

TrainedModel train_on(const EvalSet& data, const ModelConfig& mcfg,
                      const TrainConfig& tcfg) {
  TrainedModel out;
  out.cfg = mcfg;
  Rng init_rng(derive_seed(tcfg.seed, 0));
  out.store = ParameterStore::init(mcfg, init_rng);
  OptimizerState opt = OptimizerState::init(out.store);
  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    Rng erng(derive_seed(tcfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<const TrainItem*> order;
    for (const auto& it : data.chunks) order.push_back(&it);
    shuffle(order, erng);
    Scalar acc = 0.0;
    int steps = 0;
    for (std::size_t i = 0; i < order.size();
         i += static_cast<std::size_t>(tcfg.batch_size)) {
      std::vector<const TrainItem*> batch(
          order.begin() + i,
          order.begin() + std::min(order.size(),
                                   i + static_cast<std::size_t>(
                                           tcfg.batch_size)));
      StepStats s = train_step(batch, out.store, opt, mcfg, tcfg, erng);
      acc += s.tf_accuracy;
      ++steps;
    }
    out.last_epoch_tf_acc = acc / steps;
  }
  return out;
}

DerReport score_set(const TrainedModel& model, const EvalSet& data,
                    Scalar collar) {
  std::vector<RttmSegment> all_ref, all_hyp;
  for (std::size_t i = 0; i < data.full.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "mix_%05d", static_cast<int>(i));
    InferResult res = infer(data.full[i], model.store, model.cfg);
    ActivityMatrix act;
    act.rows = res.activity;
    act.frame_shift_s = 0.1;
    std::vector<std::string> names;
    for (int s = 0; s < res.n_speakers; ++s)
      names.push_back("hyp" + std::to_string(s + 1));
    auto hyp = activity_to_segments(act, names, id);
    all_hyp.insert(all_hyp.end(), hyp.begin(), hyp.end());
    all_ref.insert(all_ref.end(), data.refs[i].begin(), data.refs[i].end());
  }
  return der(all_ref, all_hyp, collar);
}

// ---------------------------------------------------------------------- 6
void criterion_overfit() {
  const auto t0 = Clock::now();
  FeatureConfig fcfg;  // 23 mels, context 7, subsample 10
  ModelConfig mcfg;
  mcfg.n_blocks = 2;
  mcfg.d_model = 64;
  mcfg.n_heads = 4;
  mcfg.input_dim = fcfg.spliced_dim();
  mcfg.subtasks = {SubtaskKind::SAD};
  mcfg.max_speakers = 3;
  TrainConfig tcfg;
  tcfg.chunk_frames = 250;
  tcfg.batch_size = 5;
  tcfg.max_epochs = 30;
  tcfg.lr_scale = 0.05;
  tcfg.warmup_steps = 60;
  tcfg.seed = 1;

  EvalSet data = build_set(20, 500, 90.0, fcfg, tcfg.chunk_frames);
  TrainedModel model = train_on(data, mcfg, tcfg);
  DerReport rep = score_set(model, data, 0.0);
  const double dt = seconds_since(t0);
  const bool ok =
      model.last_epoch_tf_acc >= 0.95 && rep.der_pct() < 5.0 && dt < 900.0;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "overfit 20x90s 2-speaker mixtures: teacher-forced frame "
                "accuracy %.4f, train DER %.2f%% at collar 0 (%.0f s)",
                model.last_epoch_tf_acc, rep.der_pct(), dt);
  report(6, ok, buf);
}

// ---------------------------------------------------------------------- 7
void criterion_conditioning_ablation() {
  const auto t0 = Clock::now();
  FeatureConfig fcfg;
  ModelConfig base;
  base.n_blocks = 2;
  base.d_model = 48;
  base.n_heads = 4;
  base.input_dim = fcfg.spliced_dim();
  base.subtasks = {SubtaskKind::SAD};
  base.max_speakers = 3;
  TrainConfig tcfg;
  tcfg.chunk_frames = 225;
  tcfg.batch_size = 5;
  tcfg.max_epochs = 24;
  tcfg.lr_scale = 0.05;
  tcfg.warmup_steps = 40;

  EvalSet train_set = build_set(16, 7000, 45.0, fcfg, tcfg.chunk_frames);
  EvalSet held_out = build_set(50, 9000, 30.0, fcfg, tcfg.chunk_frames);

  std::vector<double> cond, multi;
  for (std::uint64_t seed : {11ULL, 22ULL, 33ULL}) {
    for (ModelVariant variant : {ModelVariant::conditional_chain,
                                 ModelVariant::parallel_multitask}) {
      ModelConfig mcfg = base;
      mcfg.variant = variant;
      TrainConfig t = tcfg;
      t.seed = seed;
      TrainedModel model = train_on(train_set, mcfg, t);
      const double d = score_set(model, held_out, 0.25).der_pct();
      (variant == ModelVariant::conditional_chain ? cond : multi).push_back(d);
    }
  }
  std::sort(cond.begin(), cond.end());
  std::sort(multi.begin(), multi.end());
  const bool better = cond[1] <= multi[1];
  char buf[240];
  std::snprintf(
      buf, sizeof(buf),
      "soft: held-out DER median of 3 seeds, SAD-first conditional %.2f%% "
      "vs parallel multitask %.2f%% (seeds: %.2f/%.2f/%.2f vs "
      "%.2f/%.2f/%.2f) (%.0f s)",
      cond[1], multi[1], cond[0], cond[1], cond[2], multi[0], multi[1],
      multi[2], seconds_since(t0));
  report(7, better, buf, /*soft=*/true);
}

// ---------------------------------------------------------------------- 8
void criterion_sceend_reduction() {
  ModelConfig cfg;
  cfg.n_blocks = 2;
  cfg.d_model = 16;
  cfg.n_heads = 4;
  cfg.input_dim = 12;
  cfg.max_speakers = 2;  // K = 0
  Rng rng(808);
  ParameterStore store = ParameterStore::init(cfg, rng);
  Matrix x(12, 10);
  for (Index r = 0; r < 12; ++r)
    for (Index c = 0; c < 10; ++c) x(r, c) = uniform_real(rng, -1, 1);

  ad::Tape t1(false);
  ParamVars pv1 = stage_params(t1, store);
  ChainOutputs a = forward(t1, pv1, x, cfg, 2);

  ParameterStore padded = store;
  padded.params["dec.sub0.w"] = Matrix::Random(1, cfg.d_model);
  padded.params["dec.sub0.b"] = Matrix::Constant(1, 1, 3.7);
  ad::Tape t2(false);
  ParamVars pv2 = stage_params(t2, padded);
  ChainOutputs b = forward(t2, pv2, x, cfg, 2);

  bool ok = true;
  for (std::size_t s = 0; s < a.speaker_probs.size(); ++s)
    if ((a.speaker_probs[s] - b.speaker_probs[s]).cwiseAbs().maxCoeff() !=
        0.0)
      ok = false;

  // SAD override: with an oracle-perfect SAD condition, no speaker activity
  // survives on true non-speech frames
  SimConfig scfg;
  scfg.target_duration_s = 10.0;
  scfg.seed = 99;
  Mixture mix = simulate_mixture(scfg);
  FeatureConfig fcfg;
  fcfg.n_mels = 8;
  fcfg.context = 2;
  fcfg.subsample = 10;
  FeatureMatrix feats = extract_pipeline(mix.waveform, fcfg);

  ModelConfig sad_cfg;
  sad_cfg.n_blocks = 1;
  sad_cfg.d_model = 16;
  sad_cfg.n_heads = 4;
  sad_cfg.input_dim = fcfg.spliced_dim();
  sad_cfg.subtasks = {SubtaskKind::SAD};
  sad_cfg.max_speakers = 3;
  Rng rng2(809);
  ParameterStore noisy = ParameterStore::init(sad_cfg, rng2);
  noisy.at("dec.diar.w").setZero();
  noisy.at("dec.diar.b").setConstant(4.0);  // fires on every frame
  InferResult res = infer(feats.data, noisy, sad_cfg, /*sad_override=*/true);

  // the model's own SAD decision must gate every row exactly
  const BinaryVector& sad_dec = res.outputs.subtask_decisions[0];
  for (const auto& row : res.outputs.speaker_decisions)
    for (Index t = 0; t < row.size(); ++t)
      if (!sad_dec(t) && row(t)) ok = false;

  // with the true (oracle) SAD applied, true non-speech frames are silent
  FileActivity coarse = segments_to_activity(
      activity_to_segments(mix.activity, mix.speaker_ids, "m"),
      feats.frame_shift_s, feats.frames());
  BinaryVector oracle_sad = derive_sad(coarse.activity.rows);
  ActivityMatrix hyp;
  hyp.rows = res.activity;
  hyp.frame_shift_s = feats.frame_shift_s;
  ActivityMatrix filtered = oracle_sad_filter(hyp, oracle_sad);
  for (Index t = 0; t < filtered.frames(); ++t)
    if (!oracle_sad(t))
      for (Index s = 0; s < filtered.speakers(); ++s)
        if (filtered.rows(s, t)) ok = false;

  report(8, ok,
         "K=0 outputs ignore subtask decoder parameters bit-exactly; SAD "
         "override and oracle SAD filtering zero all non-speech frames");
}

// ---------------------------------------------------------------------- 9
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_cli_determinism() {
  const char* bin = std::getenv("CHAINDIAR_BIN");
  if (!bin) {
    report(9, false, "CHAINDIAR_BIN not set; cannot run cmd_train twice");
    return;
  }
  const auto base =
      std::filesystem::temp_directory_path() / "chaindiar_acceptance_c9";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  const std::string data_dir = (base / "data").string();
  const std::string quiet = " > /dev/null 2>&1";

  std::string sim = std::string(bin) +
                    " simulate --out-dir " + data_dir +
                    " --num-mixtures 3 --duration 20 --seed 5" + quiet;
  if (std::system(sim.c_str()) != 0) {
    report(9, false, "simulate step failed");
    return;
  }
  auto train_cmd = [&](const std::string& out_dir) {
    return std::string(bin) + " train --manifest " + data_dir +
           "/manifest.txt --out-dir " + out_dir +
           " --epochs 2 --batch-size 4 --chunk-frames 50 --n-mels 8 "
           "--context 2 --subsample 10 --blocks 1 --d-model 16 --heads 2 "
           "--max-speakers 3 --subtasks sad --warmup 10 --lr-scale 0.02 "
           "--seed 17" +
           quiet;
  };
  const bool ran =
      std::system(train_cmd((base / "run1").string()).c_str()) == 0 &&
      std::system(train_cmd((base / "run2").string()).c_str()) == 0;
  if (!ran) {
    report(9, false, "cmd_train failed");
    return;
  }
  const bool ckpt_equal = slurp((base / "run1" / "final.ckpt").string()) ==
                          slurp((base / "run2" / "final.ckpt").string());
  const bool metrics_equal =
      slurp((base / "run1" / "metrics.log").string()) ==
      slurp((base / "run2" / "metrics.log").string());
  const bool nonempty =
      !slurp((base / "run1" / "final.ckpt").string()).empty() &&
      !slurp((base / "run1" / "metrics.log").string()).empty();
  std::filesystem::remove_all(base);
  report(9, ckpt_equal && metrics_equal && nonempty,
         "two cmd_train runs with one seed produce byte-identical "
         "final checkpoints and metrics logs");
}

// --------------------------------------------------------------------- 10
void criterion_stop_condition() {
  bool ok = true;
  for (int stop_at = 1; stop_at <= 5; ++stop_at) {
    std::vector<BinaryVector> rows;
    const int got = run_speaker_loop(
        [&](int s) {
          BinaryVector row = BinaryVector::Zero(6);
          if (s < stop_at) row(s % 6) = 1;  // active until the stop step
          return row;
        },
        8, &rows);
    // loop oracle: first all-zero row appears at step stop_at
    if (got != stop_at - 1) ok = false;
    if (rows.size() != static_cast<std::size_t>(stop_at)) ok = false;
  }
  report(10, ok,
         "stub posteriors stopping at step s* give S-hat = s*-1 for s* in "
         "1..5, matching the loop oracle");
}

}  // namespace

int main() {
  std::printf("chaindiar acceptance suite\n");
  criterion_pit_exactness();
  criterion_gradient_fidelity();
  criterion_label_oracle();
  criterion_scorer_identities();
  criterion_counting_report();
  criterion_overfit();
  criterion_conditioning_ablation();
  criterion_sceend_reduction();
  criterion_cli_determinism();
  criterion_stop_condition();
  if (g_failures == 0)
    std::printf("all hard criteria passed\n");
  else
    std::printf("%d hard criteria FAILED\n", g_failures);
  return g_failures;
}
