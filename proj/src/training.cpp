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

#include "chaindiar/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "chaindiar/features.hpp"
#include "chaindiar/labels.hpp"
#include "chaindiar/scoring.hpp"

namespace chaindiar {

namespace {
constexpr Scalar kAdamBeta1 = 0.9;
constexpr Scalar kAdamBeta2 = 0.98;
constexpr Scalar kAdamEps = 1e-9;
constexpr Scalar kLossAbortThreshold = 1e6;
}  // namespace

void TrainConfig::validate() const {
  if (chunk_frames < 1 || batch_size < 1 || max_epochs < 1)
    throw DataError("train config values must be positive");
  if (warmup_steps < 1) throw DataError("warmup_steps must be >= 1");
  if (grad_clip <= 0.0) throw DataError("grad_clip must be positive");
}

OptimizerState OptimizerState::init(const ParameterStore& store) {
  OptimizerState opt;
  for (const auto& [name, value] : store.params) {
    opt.m.emplace(name, Matrix::Zero(value.rows(), value.cols()));
    opt.v.emplace(name, Matrix::Zero(value.rows(), value.cols()));
  }
  opt.step = 0;
  return opt;
}

Scalar noam_lr(const TrainConfig& cfg, std::int64_t step) {
  const Scalar s = static_cast<Scalar>(step);
  const Scalar w = static_cast<Scalar>(cfg.warmup_steps);
  return cfg.lr_scale * std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

void backward(ad::Tape& tape, ad::Var loss, const ParamVars& pv,
              ParameterStore& store) {
  tape.backward(loss);
  for (const auto& [name, var] : pv) {
    const Matrix& g = tape.grad(var);
    if (!g.allFinite())
      throw NumericError("non-finite gradient for parameter " + name);
    auto it = store.grads.find(name);
    if (it == store.grads.end())
      store.grads.emplace(name, g);
    else
      it->second += g;
  }
}

std::vector<TrainItem> load_training_set(
    const std::vector<ManifestEntry>& manifest, const FeatureConfig& fcfg,
    int chunk_frames) {
  if (manifest.empty()) throw DataError("no training data");
  std::vector<TrainItem> items;
  for (const auto& entry : manifest) {
    const Waveform wav = read_wav(entry.wav_path);
    const FeatureMatrix feats = extract_pipeline(wav, fcfg);
    std::vector<RttmSegment> segs;
    for (auto& s : read_rttm(entry.rttm_path))
      if (s.file_id == entry.id) segs.push_back(std::move(s));
    const FileActivity ref =
        segments_to_activity(segs, feats.frame_shift_s, feats.frames());

    const Index t_total = feats.frames();
    for (Index start = 0; start < t_total; start += chunk_frames) {
      const Index len = std::min<Index>(chunk_frames, t_total - start);
      TrainItem item;
      item.id = entry.id;
      item.x = feats.data.middleCols(start, len);
      item.refs = ref.activity.rows.middleCols(start, len);
      items.push_back(std::move(item));
    }
  }
  return items;
}

StepStats train_step(const std::vector<const TrainItem*>& batch,
                     ParameterStore& store, OptimizerState& opt,
                     const ModelConfig& mcfg, const TrainConfig& tcfg,
                     Rng& rng) {
  if (batch.empty()) throw DataError("empty training batch");
  const Scalar inv_b = 1.0 / static_cast<Scalar>(batch.size());
  const AdaptationPolicy* policy =
      tcfg.adaptation.has_value() ? &tcfg.adaptation.value() : nullptr;

  ad::Tape tape(true);
  ParamVars pv = stage_params(tape, store);

  StepStats stats;
  ad::Var total;
  Index acc_frames = 0, acc_correct = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TrainItem& item = *batch[i];
    TwoStageResult r = two_stage_pit(tape, pv, item.x, item.refs, store,
                                     mcfg, policy, &rng);
    stats.loss.l_sub += r.breakdown.l_sub;
    stats.loss.l_pit += r.breakdown.l_pit;
    if (i == 0) stats.loss.best_perm = r.breakdown.best_perm;
    total = i == 0 ? r.total : tape.add(total, r.total);

    for (std::size_t s = 0; s < r.outputs.speaker_probs.size(); ++s) {
      const BinaryVector dec = threshold(r.outputs.speaker_probs[s]);
      for (Index t = 0; t < dec.size(); ++t) {
        ++acc_frames;
        if (dec(t) == r.speaker_targets(static_cast<Index>(s), t))
          ++acc_correct;
      }
    }
  }
  stats.loss.l_sub *= inv_b;
  stats.loss.l_pit *= inv_b;
  stats.loss.total = stats.loss.l_sub + stats.loss.l_pit;
  stats.tf_accuracy =
      acc_frames ? static_cast<Scalar>(acc_correct) / acc_frames : 0.0;

  if (!std::isfinite(stats.loss.total) ||
      stats.loss.total > kLossAbortThreshold) {
    std::ostringstream msg;
    msg << "training diverged: loss " << stats.loss.total << " at step "
        << (opt.step + 1);
    throw NumericError(msg.str());
  }

  ad::Var batch_loss = tape.scale(total, inv_b);
  store.zero_grads();
  backward(tape, batch_loss, pv, store);

  // Global-norm gradient clipping.
  Scalar sq_norm = 0.0;
  for (const auto& [name, g] : store.grads) sq_norm += g.squaredNorm();
  const Scalar norm = std::sqrt(sq_norm);
  if (norm > tcfg.grad_clip) {
    const Scalar scale = tcfg.grad_clip / norm;
    for (auto& [name, g] : store.grads) g *= scale;
  }

  // Adam with Noam warmup.
  opt.step += 1;
  const Scalar lr = noam_lr(tcfg, opt.step);
  const Scalar bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<Scalar>(opt.step));
  const Scalar bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<Scalar>(opt.step));
  for (auto& [name, theta] : store.params) {
    const Matrix& g = store.grads.at(name);
    Matrix& m = opt.m.at(name);
    Matrix& v = opt.v.at(name);
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    const ArrayXX m_hat = m.array() / bc1;
    const ArrayXX v_hat = v.array() / bc2;
    theta.array() -= lr * m_hat / (v_hat.sqrt() + kAdamEps);
  }
  stats.lr = lr;
  return stats;
}

// ---------------------------------------------------------------------------
// fit / adapt

namespace {

std::string format_metrics_line(std::int64_t step, const StepStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "step=%lld lsub=%.12g lpit=%.12g total=%.12g lr=%.12g "
                "tf_acc=%.6f",
                static_cast<long long>(step), s.loss.l_sub, s.loss.l_pit,
                s.loss.total, s.lr, s.tf_accuracy);
  return buf;
}

Checkpoint run_training(const std::vector<ManifestEntry>& manifest,
                        const FeatureConfig& fcfg, const ModelConfig& mcfg,
                        const TrainConfig& tcfg, const FitOptions& opts,
                        ParameterStore store, OptimizerState opt,
                        int start_epoch) {
  tcfg.validate();
  mcfg.validate();
  std::vector<TrainItem> items =
      load_training_set(manifest, fcfg, tcfg.chunk_frames);
  if (items.empty()) throw DataError("no training data");

  std::filesystem::create_directories(opts.out_dir);
  std::ostringstream metrics;
  metrics << "# chaindiar metrics log\n";
  if (tcfg.adaptation.has_value()) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "# adaptation: frame_drop_ratio=%g subtask_loss_scale=%g\n",
                  tcfg.adaptation->frame_drop_ratio,
                  tcfg.adaptation->subtask_weight);
    metrics << buf;
  }

  auto checkpoint_of = [&](int epoch) {
    Checkpoint ckpt;
    ckpt.model = mcfg;
    ckpt.features = fcfg;
    ckpt.store = store;
    ckpt.store.grads.clear();
    for (const auto& [name, m] : opt.m) ckpt.extra_tensors["adam.m." + name] = m;
    for (const auto& [name, m] : opt.v) ckpt.extra_tensors["adam.v." + name] = m;
    ckpt.extra_meta["epoch"] = std::to_string(epoch);
    ckpt.extra_meta["opt_step"] = std::to_string(opt.step);
    return ckpt;
  };

  Checkpoint last = checkpoint_of(start_epoch);
  for (int epoch = start_epoch + 1; epoch <= tcfg.max_epochs; ++epoch) {
    Rng epoch_rng(derive_seed(tcfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<const TrainItem*> order;
    order.reserve(items.size());
    for (const auto& it : items) order.push_back(&it);
    shuffle(order, epoch_rng);

    for (std::size_t i = 0; i < order.size(); i += tcfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), i + static_cast<std::size_t>(tcfg.batch_size));
      std::vector<const TrainItem*> batch(order.begin() + i,
                                          order.begin() + end);
      StepStats stats = train_step(batch, store, opt, mcfg, tcfg, epoch_rng);
      metrics << format_metrics_line(opt.step, stats) << "\n";
    }

    char name[64];
    std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
    last = checkpoint_of(epoch);
    save_checkpoint(opts.out_dir + "/" + name, last);
  }

  save_checkpoint(opts.out_dir + "/final.ckpt", last);
  write_file_atomic(opts.out_dir + "/metrics.log", metrics.str());
  return last;
}

OptimizerState optimizer_from_checkpoint(const Checkpoint& ckpt) {
  OptimizerState opt = OptimizerState::init(ckpt.store);
  for (const auto& [name, m] : ckpt.extra_tensors) {
    if (name.rfind("adam.m.", 0) == 0) opt.m.at(name.substr(7)) = m;
    if (name.rfind("adam.v.", 0) == 0) opt.v.at(name.substr(7)) = m;
  }
  auto it = ckpt.extra_meta.find("opt_step");
  opt.step = it == ckpt.extra_meta.end() ? 0 : std::stoll(it->second);
  return opt;
}

int epoch_from_checkpoint(const Checkpoint& ckpt) {
  auto it = ckpt.extra_meta.find("epoch");
  return it == ckpt.extra_meta.end() ? 0 : std::stoi(it->second);
}

void check_store_matches_config(const ParameterStore& store,
                                const ModelConfig& cfg) {
  Rng probe_rng(0);
  ParameterStore expect = ParameterStore::init(cfg, probe_rng);
  if (expect.params.size() != store.params.size())
    throw DataError("checkpoint/config mismatch: parameter set differs");
  for (const auto& [name, m] : expect.params) {
    auto it = store.params.find(name);
    if (it == store.params.end() || it->second.rows() != m.rows() ||
        it->second.cols() != m.cols())
      throw DataError("checkpoint/config mismatch: " + name);
  }
}

}  // namespace

Checkpoint fit(const std::vector<ManifestEntry>& manifest,
               const FeatureConfig& fcfg, const ModelConfig& mcfg,
               const TrainConfig& tcfg, const FitOptions& opts) {
  if (manifest.empty()) throw DataError("no training data");
  if (!opts.resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(opts.resume_path);
    check_store_matches_config(ckpt.store, ckpt.model);
    return run_training(manifest, ckpt.features, ckpt.model, tcfg, opts,
                        ckpt.store, optimizer_from_checkpoint(ckpt),
                        epoch_from_checkpoint(ckpt));
  }
  Rng init_rng(derive_seed(tcfg.seed, 0));
  ParameterStore store = ParameterStore::init(mcfg, init_rng);
  OptimizerState opt = OptimizerState::init(store);
  return run_training(manifest, fcfg, mcfg, tcfg, opts, std::move(store),
                      std::move(opt), 0);
}

Checkpoint adapt(const std::string& init_checkpoint,
                 const std::vector<ManifestEntry>& manifest,
                 const TrainConfig& tcfg, const FitOptions& opts) {
  if (manifest.empty()) throw DataError("no training data");
  Checkpoint ckpt = load_checkpoint(init_checkpoint);
  check_store_matches_config(ckpt.store, ckpt.model);
  // Adaptation restarts the epoch counter and optimizer.
  return run_training(manifest, ckpt.features, ckpt.model, tcfg, opts,
                      ckpt.store, OptimizerState::init(ckpt.store), 0);
}

}  // namespace chaindiar
