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

#include "chaindiar/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chaindiar/io.hpp"
#include "json.hpp"

namespace chaindiar {

using nlohmann::json;

std::string to_string(ModelVariant v) {
  return v == ModelVariant::conditional_chain ? "conditional_chain"
                                              : "parallel_multitask";
}

ModelVariant variant_from_string(const std::string& s) {
  if (s == "conditional_chain" || s == "conditional")
    return ModelVariant::conditional_chain;
  if (s == "parallel_multitask" || s == "multitask")
    return ModelVariant::parallel_multitask;
  throw DataError("unknown model variant: " + s);
}

int ModelConfig::sad_index() const {
  for (int k = 0; k < n_subtasks(); ++k)
    if (subtasks[static_cast<std::size_t>(k)] == SubtaskKind::SAD) return k;
  return -1;
}

void ModelConfig::validate() const {
  if (n_blocks < 1) throw DataError("n_blocks must be >= 1");
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0)
    throw DataError("d_model must be a positive multiple of n_heads");
  if (input_dim < 1) throw DataError("input_dim must be >= 1");
  if (max_speakers < 1) throw DataError("max_speakers must be >= 1");
}

// ---------------------------------------------------------------------------
// parameters

Matrix& ParameterStore::at(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw DataError("unknown parameter: " + name);
  return it->second;
}

const Matrix& ParameterStore::at(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw DataError("unknown parameter: " + name);
  return it->second;
}

void ParameterStore::zero_grads() {
  for (const auto& [name, value] : params) {
    auto it = grads.find(name);
    if (it == grads.end())
      grads.emplace(name, Matrix::Zero(value.rows(), value.cols()));
    else
      it->second.setZero();
  }
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, value] : params)
    n += static_cast<std::size_t>(value.size());
  return n;
}

namespace {

Matrix uniform_matrix(Index rows, Index cols, Scalar scale, Rng& rng) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      m(r, c) = uniform_real(rng, -scale, scale);
  return m;
}

void add_lstm(ParameterStore& st, const std::string& prefix, int d,
              Scalar scale, Rng& rng) {
  st.params[prefix + ".wx"] = uniform_matrix(4 * d, 2 * d, scale, rng);
  st.params[prefix + ".wh"] = uniform_matrix(4 * d, d, scale, rng);
  Matrix b = Matrix::Zero(4 * d, 1);
  b.block(d, 0, d, 1).setOnes();  // forget-gate bias +1
  st.params[prefix + ".b"] = b;
}

void add_cond(ParameterStore& st, const std::string& prefix, int d,
              Scalar scale, Rng& rng) {
  st.params[prefix + ".w"] = uniform_matrix(d, 1, scale, rng);
  st.params[prefix + ".b"] = Matrix::Zero(d, 1);
}

std::string block_key(int b, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "enc.b%02d.%s", b, suffix);
  return buf;
}

}  // namespace

ParameterStore ParameterStore::init(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ParameterStore st;
  const int d = cfg.d_model;
  const int h = 4 * d;  // FFN inner width
  const Scalar sd = 1.0 / std::sqrt(static_cast<Scalar>(d));

  st.params["enc.in.w"] = uniform_matrix(
      d, cfg.input_dim, 1.0 / std::sqrt(static_cast<Scalar>(cfg.input_dim)),
      rng);
  st.params["enc.in.b"] = Matrix::Zero(d, 1);
  for (int b = 0; b < cfg.n_blocks; ++b) {
    st.params[block_key(b, "ln1.g")] = Matrix::Ones(d, 1);
    st.params[block_key(b, "ln1.b")] = Matrix::Zero(d, 1);
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
      st.params[block_key(b, w)] = uniform_matrix(d, d, sd, rng);
    for (const char* w : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
      st.params[block_key(b, w)] = Matrix::Zero(d, 1);
    st.params[block_key(b, "ln2.g")] = Matrix::Ones(d, 1);
    st.params[block_key(b, "ln2.b")] = Matrix::Zero(d, 1);
    st.params[block_key(b, "ffn.w1")] = uniform_matrix(h, d, sd, rng);
    st.params[block_key(b, "ffn.b1")] = Matrix::Zero(h, 1);
    st.params[block_key(b, "ffn.w2")] = uniform_matrix(
        d, h, 1.0 / std::sqrt(static_cast<Scalar>(h)), rng);
    st.params[block_key(b, "ffn.b2")] = Matrix::Zero(d, 1);
  }
  st.params["enc.ln.g"] = Matrix::Ones(d, 1);
  st.params["enc.ln.b"] = Matrix::Zero(d, 1);

  add_cond(st, "cond", d, sd, rng);
  add_lstm(st, "chain", d, sd, rng);
  if (cfg.variant == ModelVariant::parallel_multitask) {
    add_cond(st, "subcond", d, sd, rng);
    add_lstm(st, "subchain", d, sd, rng);
  }
  for (int k = 0; k < cfg.n_subtasks(); ++k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dec.sub%d", k);
    st.params[std::string(buf) + ".w"] = uniform_matrix(1, d, sd, rng);
    st.params[std::string(buf) + ".b"] = Matrix::Zero(1, 1);
  }
  st.params["dec.diar.w"] = uniform_matrix(1, d, sd, rng);
  st.params["dec.diar.b"] = Matrix::Zero(1, 1);
  return st;
}

ParamVars stage_params(ad::Tape& tape, const ParameterStore& store) {
  ParamVars pv;
  for (const auto& [name, value] : store.params)
    pv.emplace(name, tape.leaf(value));
  return pv;
}

// ---------------------------------------------------------------------------
// encoder

namespace {

const ad::Var& pvat(const ParamVars& pv, const std::string& name) {
  auto it = pv.find(name);
  if (it == pv.end()) throw DataError("parameter not staged: " + name);
  return it->second;
}

Matrix sinusoid_positions(int d, Index t_len) {
  Matrix pe(d, t_len);
  for (Index t = 0; t < t_len; ++t)
    for (int i = 0; i < d; ++i) {
      const double angle =
          static_cast<double>(t) /
          std::pow(10000.0, 2.0 * (i / 2) / static_cast<double>(d));
      pe(i, t) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

ad::Var linear(ad::Tape& tape, const ParamVars& pv, const std::string& w,
               const std::string& b, ad::Var x) {
  return tape.add_col_broadcast(tape.matmul(pvat(pv, w), x), pvat(pv, b));
}

}  // namespace

ad::Var encode(ad::Tape& tape, const ParamVars& pv, const Matrix& x,
               const ModelConfig& cfg, EncoderProbe* probe) {
  if (x.rows() != cfg.input_dim)
    throw DataError("feature dimension mismatch: expected " +
                    std::to_string(cfg.input_dim) + ", got " +
                    std::to_string(x.rows()));
  const int d = cfg.d_model;
  const int dh = d / cfg.n_heads;
  const Scalar inv_sqrt_dh = 1.0 / std::sqrt(static_cast<Scalar>(dh));

  ad::Var in = tape.leaf(x);
  ad::Var e = linear(tape, pv, "enc.in.w", "enc.in.b", in);
  if (cfg.positional_encoding)
    e = tape.add(e, tape.leaf(sinusoid_positions(d, x.cols())));

  if (probe) probe->attention.assign(static_cast<std::size_t>(cfg.n_blocks), {});
  for (int b = 0; b < cfg.n_blocks; ++b) {
    ad::Var y = tape.layer_norm(e, pvat(pv, block_key(b, "ln1.g")),
                                pvat(pv, block_key(b, "ln1.b")));
    ad::Var q = linear(tape, pv, block_key(b, "attn.wq"),
                       block_key(b, "attn.bq"), y);
    ad::Var k = linear(tape, pv, block_key(b, "attn.wk"),
                       block_key(b, "attn.bk"), y);
    ad::Var v = linear(tape, pv, block_key(b, "attn.wv"),
                       block_key(b, "attn.bv"), y);
    ad::Var concat;
    for (int head = 0; head < cfg.n_heads; ++head) {
      ad::Var qh = tape.rows(q, head * dh, dh);
      ad::Var kh = tape.rows(k, head * dh, dh);
      ad::Var vh = tape.rows(v, head * dh, dh);
      ad::Var scores =
          tape.scale(tape.matmul(tape.transpose(qh), kh), inv_sqrt_dh);
      ad::Var weights = tape.softmax_rows(scores);
      if (probe)
        probe->attention[static_cast<std::size_t>(b)].push_back(weights);
      ad::Var oh = tape.matmul(vh, tape.transpose(weights));
      concat = head == 0 ? oh : tape.vstack(concat, oh);
    }
    ad::Var attn = linear(tape, pv, block_key(b, "attn.wo"),
                          block_key(b, "attn.bo"), concat);
    e = tape.add(e, attn);

    ad::Var y2 = tape.layer_norm(e, pvat(pv, block_key(b, "ln2.g")),
                                 pvat(pv, block_key(b, "ln2.b")));
    ad::Var hidden = tape.relu(
        linear(tape, pv, block_key(b, "ffn.w1"), block_key(b, "ffn.b1"), y2));
    ad::Var ffn = linear(tape, pv, block_key(b, "ffn.w2"),
                         block_key(b, "ffn.b2"), hidden);
    e = tape.add(e, ffn);
  }
  return tape.layer_norm(e, pvat(pv, "enc.ln.g"), pvat(pv, "enc.ln.b"));
}

ad::Var embed_condition(ad::Tape& tape, const ParamVars& pv,
                        const BinaryVector& condition,
                        const std::string& prefix) {
  Matrix c(1, condition.size());
  for (Index t = 0; t < condition.size(); ++t)
    c(0, t) = static_cast<Scalar>(condition(t));
  return tape.add_col_broadcast(
      tape.matmul(pvat(pv, prefix + ".w"), tape.leaf(std::move(c))),
      pvat(pv, prefix + ".b"));
}

ChainState chain_step(ad::Tape& tape, const ParamVars& pv, ad::Var embeddings,
                      const BinaryVector& condition, const ChainState& state,
                      const std::string& prefix,
                      const std::string& cond_prefix) {
  const Index t_len = tape.value(embeddings).cols();
  if (condition.size() != t_len)
    throw DataError("condition length does not match frame count");
  const Index d = tape.value(state.hidden).rows();

  ad::Var femb = embed_condition(tape, pv, condition, cond_prefix);
  ad::Var inp = tape.vstack(embeddings, femb);
  ad::Var z = tape.add_col_broadcast(
      tape.add(tape.matmul(pvat(pv, prefix + ".wx"), inp),
               tape.matmul(pvat(pv, prefix + ".wh"), state.hidden)),
      pvat(pv, prefix + ".b"));
  ad::Var gi = tape.sigmoid(tape.rows(z, 0, d));
  ad::Var gf = tape.sigmoid(tape.rows(z, d, d));
  ad::Var gc = tape.tanh(tape.rows(z, 2 * d, d));
  ad::Var go = tape.sigmoid(tape.rows(z, 3 * d, d));
  ad::Var cell = tape.add(tape.cmul(gf, state.cell), tape.cmul(gi, gc));
  ad::Var hidden = tape.cmul(go, tape.tanh(cell));
  return ChainState{hidden, cell};
}

// ---------------------------------------------------------------------------
// chain forward

namespace {

ad::Var decoder_head(ad::Tape& tape, const ParamVars& pv,
                     const std::string& prefix, ad::Var hidden) {
  return tape.sigmoid(tape.add_col_broadcast(
      tape.matmul(pvat(pv, prefix + ".w"), hidden), pvat(pv, prefix + ".b")));
}

Vector prob_vector(const ad::Tape& tape, ad::Var p) {
  return tape.value(p).row(0).transpose();
}

ChainState zero_state(ad::Tape& tape, int d, Index t_len) {
  return ChainState{tape.leaf(Matrix::Zero(d, t_len)),
                    tape.leaf(Matrix::Zero(d, t_len))};
}

}  // namespace

ChainOutputs forward(ad::Tape& tape, const ParamVars& pv, const Matrix& x,
                     const ModelConfig& cfg, int n_speaker_steps,
                     const TeacherForcing* tf, EncoderProbe* probe) {
  cfg.validate();
  const int n_sub = cfg.n_subtasks();
  const Index t_len = x.cols();
  if (n_speaker_steps > cfg.max_speakers)
    throw DataError("requested speaker steps exceed max_speakers");
  if (tf) {
    if (tf->subtask_refs.rows() != n_sub ||
        (n_sub > 0 && tf->subtask_refs.cols() != t_len))
      throw DataError("teacher forcing needs one reference row per subtask");
    if (tf->speaker_refs.rows() != n_speaker_steps ||
        (n_speaker_steps > 0 && tf->speaker_refs.cols() != t_len))
      throw DataError("teacher forcing needs one reference row per speaker");
  }
  const bool parallel = cfg.variant == ModelVariant::parallel_multitask;

  ChainOutputs out;
  ad::Var e = encode(tape, pv, x, cfg, probe);

  // Subtask chain.
  ChainState state = zero_state(tape, cfg.d_model, t_len);
  BinaryVector cond = BinaryVector::Zero(t_len);
  const std::string sub_lstm = parallel ? "subchain" : "chain";
  const std::string sub_cond = parallel ? "subcond" : "cond";
  for (int k = 0; k < n_sub; ++k) {
    state = chain_step(tape, pv, e, cond, state, sub_lstm, sub_cond);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dec.sub%d", k);
    ad::Var p = decoder_head(tape, pv, buf, state.hidden);
    Vector probs = prob_vector(tape, p);
    BinaryVector dec =
        tf ? BinaryVector(tf->subtask_refs.row(k).transpose())
           : threshold(probs);
    out.subtask_probs.push_back(std::move(probs));
    out.subtask_prob_vars.push_back(p);
    out.subtask_decisions.push_back(dec);
    cond = out.subtask_decisions.back();
  }

  // Speaker chain. The parallel variant restarts from zero with no
  // cross-conditioning; the conditional chain continues, seeding the first
  // speaker with the last subtask's activity (zeros when K = 0).
  if (parallel) {
    state = zero_state(tape, cfg.d_model, t_len);
    cond = BinaryVector::Zero(t_len);
  }
  for (int s = 0; s < n_speaker_steps; ++s) {
    state = chain_step(tape, pv, e, cond, state, "chain", "cond");
    ad::Var p = decoder_head(tape, pv, "dec.diar", state.hidden);
    Vector probs = prob_vector(tape, p);
    BinaryVector dec =
        tf ? BinaryVector(tf->speaker_refs.row(s).transpose())
           : threshold(probs);
    out.speaker_probs.push_back(std::move(probs));
    out.speaker_prob_vars.push_back(p);
    out.speaker_decisions.push_back(dec);
    cond = out.speaker_decisions.back();
  }
  return out;
}

InferResult infer(const Matrix& x, const ParameterStore& store,
                  const ModelConfig& cfg, bool sad_override) {
  cfg.validate();
  ad::Tape tape(false);
  ParamVars pv = stage_params(tape, store);
  const Index t_len = x.cols();
  const int n_sub = cfg.n_subtasks();
  const bool parallel = cfg.variant == ModelVariant::parallel_multitask;

  InferResult res;
  ad::Var e = encode(tape, pv, x, cfg);

  ChainState state = zero_state(tape, cfg.d_model, t_len);
  BinaryVector cond = BinaryVector::Zero(t_len);
  const std::string sub_lstm = parallel ? "subchain" : "chain";
  const std::string sub_cond = parallel ? "subcond" : "cond";
  for (int k = 0; k < n_sub; ++k) {
    state = chain_step(tape, pv, e, cond, state, sub_lstm, sub_cond);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "dec.sub%d", k);
    ad::Var p = decoder_head(tape, pv, buf, state.hidden);
    Vector probs = prob_vector(tape, p);
    BinaryVector dec = threshold(probs);
    res.outputs.subtask_probs.push_back(std::move(probs));
    res.outputs.subtask_prob_vars.push_back(p);
    res.outputs.subtask_decisions.push_back(dec);
    cond = res.outputs.subtask_decisions.back();
  }

  if (parallel) {
    state = zero_state(tape, cfg.d_model, t_len);
    cond = BinaryVector::Zero(t_len);
  }
  std::vector<BinaryVector> rows;
  res.n_speakers = run_speaker_loop(
      [&](int) {
        state = chain_step(tape, pv, e, cond, state, "chain", "cond");
        ad::Var p = decoder_head(tape, pv, "dec.diar", state.hidden);
        Vector probs = prob_vector(tape, p);
        BinaryVector dec = threshold(probs);
        res.outputs.speaker_probs.push_back(std::move(probs));
        res.outputs.speaker_prob_vars.push_back(p);
        cond = dec;
        return dec;
      },
      cfg.max_speakers, &rows);
  res.outputs.speaker_decisions = rows;

  // SAD override: the subtask decision wins on non-speech frames.
  if (sad_override && cfg.sad_index() >= 0 && !rows.empty()) {
    const BinaryVector& sad =
        res.outputs.subtask_decisions[static_cast<std::size_t>(
            cfg.sad_index())];
    for (auto& row : res.outputs.speaker_decisions)
      for (Index t = 0; t < row.size(); ++t)
        if (!sad(t)) row(t) = 0;
  }

  res.activity = BinaryMatrix::Zero(res.n_speakers, t_len);
  for (int s = 0; s < res.n_speakers; ++s)
    res.activity.row(s) =
        res.outputs.speaker_decisions[static_cast<std::size_t>(s)]
            .transpose();
  return res;
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

constexpr char kMagic[10] = {'C', 'H', 'A', 'I', 'N', 'D', 'I', 'A', 'R', '1'};

json model_to_json(const ModelConfig& cfg) {
  json j;
  j["n_blocks"] = cfg.n_blocks;
  j["d_model"] = cfg.d_model;
  j["n_heads"] = cfg.n_heads;
  j["input_dim"] = cfg.input_dim;
  std::vector<std::string> subs;
  for (auto k : cfg.subtasks) subs.push_back(to_string(k));
  j["subtasks"] = subs;
  j["max_speakers"] = cfg.max_speakers;
  j["variant"] = to_string(cfg.variant);
  j["positional_encoding"] = cfg.positional_encoding;
  return j;
}

ModelConfig model_from_json(const json& j) {
  ModelConfig cfg;
  cfg.n_blocks = j.at("n_blocks").get<int>();
  cfg.d_model = j.at("d_model").get<int>();
  cfg.n_heads = j.at("n_heads").get<int>();
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.subtasks.clear();
  for (const auto& s : j.at("subtasks"))
    cfg.subtasks.push_back(subtask_from_string(s.get<std::string>()));
  cfg.max_speakers = j.at("max_speakers").get<int>();
  cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  cfg.positional_encoding = j.at("positional_encoding").get<bool>();
  return cfg;
}

json features_to_json(const FeatureConfig& cfg) {
  json j;
  j["n_mels"] = cfg.n_mels;
  j["frame_length_ms"] = cfg.frame_length_ms;
  j["frame_shift_ms"] = cfg.frame_shift_ms;
  j["context"] = cfg.context;
  j["subsample"] = cfg.subsample;
  return j;
}

FeatureConfig features_from_json(const json& j) {
  FeatureConfig cfg;
  cfg.n_mels = j.at("n_mels").get<int>();
  cfg.frame_length_ms = j.at("frame_length_ms").get<int>();
  cfg.frame_shift_ms = j.at("frame_shift_ms").get<int>();
  cfg.context = j.at("context").get<int>();
  cfg.subsample = j.at("subsample").get<int>();
  return cfg;
}

void put_f64le(std::string& out, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

void put_u64le(std::string& out, std::uint64_t u) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

void append_tensor(std::string& payload, json& dir, const std::string& name,
                   const Matrix& m, const char* kind) {
  json entry;
  entry["name"] = name;
  entry["rows"] = m.rows();
  entry["cols"] = m.cols();
  entry["offset"] = payload.size() / 8;
  entry["kind"] = kind;
  dir.push_back(entry);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) put_f64le(payload, m(r, c));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json dir = json::array();
  std::string payload;
  for (const auto& [name, m] : ckpt.store.params)
    append_tensor(payload, dir, name, m, "param");
  for (const auto& [name, m] : ckpt.extra_tensors)
    append_tensor(payload, dir, name, m, "extra");

  json header;
  header["version"] = 1;
  header["model"] = model_to_json(ckpt.model);
  header["features"] = features_to_json(ckpt.features);
  header["tensors"] = dir;
  header["meta"] = ckpt.extra_meta;
  const std::string header_str = header.dump();

  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u64le(out, header_str.size());
  out.append(header_str);
  out.append(payload);
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[10];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a CHAINDIAR1 checkpoint: " + path);
  unsigned char lenb[8];
  in.read(reinterpret_cast<char*>(lenb), 8);
  std::uint64_t header_len = 0;
  for (int i = 0; i < 8; ++i)
    header_len |= static_cast<std::uint64_t>(lenb[i]) << (8 * i);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("truncated checkpoint header: " + path);

  json header = json::parse(header_str, nullptr, false);
  if (header.is_discarded())
    throw DataError("corrupt checkpoint header: " + path);

  Checkpoint ckpt;
  ckpt.model = model_from_json(header.at("model"));
  ckpt.features = features_from_json(header.at("features"));
  if (header.contains("meta"))
    for (auto& [k, v] : header.at("meta").items())
      ckpt.extra_meta[k] = v.get<std::string>();

  std::string payload((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  const auto read_f64 = [&payload, &path](std::size_t idx) {
    if ((idx + 1) * 8 > payload.size())
      throw DataError("truncated checkpoint payload: " + path);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i)
      u |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(payload[idx * 8 + i]))
           << (8 * i);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  };

  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const Index rows = entry.at("rows").get<Index>();
    const Index cols = entry.at("cols").get<Index>();
    std::size_t off = entry.at("offset").get<std::size_t>();
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = read_f64(off++);
    if (entry.at("kind").get<std::string>() == "param")
      ckpt.store.params[name] = std::move(m);
    else
      ckpt.extra_tensors[name] = std::move(m);
  }
  return ckpt;
}

}  // namespace chaindiar
