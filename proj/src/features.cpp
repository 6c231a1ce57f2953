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

#include "chaindiar/features.hpp"

#include <cmath>

namespace chaindiar {

namespace {

constexpr double kLogFloor = 1e-10;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n < 2) return;
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate_hz) {
  const int n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate_hz / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  Matrix fb = Matrix::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double f_lo = edges[m], f_c = edges[m + 1], f_hi = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / n_fft;
      if (f > f_lo && f < f_c)
        fb(m, k) = (f - f_lo) / (f_c - f_lo);
      else if (f >= f_c && f < f_hi)
        fb(m, k) = (f_hi - f) / (f_hi - f_c);
    }
  }
  return fb;
}

FeatureMatrix logmel_extract(const Waveform& w, const FeatureConfig& cfg) {
  if (w.sample_rate_hz <= 0) throw DataError("non-positive sample rate");
  const Index frame_len =
      static_cast<Index>(w.sample_rate_hz) * cfg.frame_length_ms / 1000;
  const Index frame_shift =
      static_cast<Index>(w.sample_rate_hz) * cfg.frame_shift_ms / 1000;
  if (static_cast<Index>(w.samples.size()) < frame_len)
    throw DataError("input too short");

  const Index n_frames =
      (static_cast<Index>(w.samples.size()) - frame_len) / frame_shift + 1;
  const int n_fft = next_pow2(static_cast<int>(frame_len));
  const int n_bins = n_fft / 2 + 1;

  Vector window(frame_len);
  for (Index i = 0; i < frame_len; ++i)
    window(i) = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                       static_cast<double>(frame_len - 1));

  const Matrix fb = mel_filterbank(cfg.n_mels, n_fft, w.sample_rate_hz);

  FeatureMatrix out;
  out.data.resize(cfg.n_mels, n_frames);
  out.frame_shift_s = cfg.frame_shift_ms / 1000.0;

  std::vector<std::complex<double>> buf(n_fft);
  Vector power(n_bins), energies(cfg.n_mels);
  for (Index t = 0; t < n_frames; ++t) {
    const Scalar* frame = w.samples.data() + t * frame_shift;
    for (Index i = 0; i < frame_len; ++i)
      buf[static_cast<std::size_t>(i)] = frame[i] * window(i);
    for (int i = static_cast<int>(frame_len); i < n_fft; ++i)
      buf[static_cast<std::size_t>(i)] = 0.0;
    fft_radix2(buf);
    for (int k = 0; k < n_bins; ++k) power(k) = std::norm(buf[k]);
    energies.noalias() = fb * power;
    for (int m = 0; m < cfg.n_mels; ++m)
      out.data(m, t) = std::log(energies(m) + kLogFloor);
  }
  return out;
}

FeatureMatrix splice(const FeatureMatrix& x, int context) {
  if (context < 0) throw DataError("negative splice context");
  const Index f = x.data.rows(), t_len = x.data.cols();
  const Index width = 2 * static_cast<Index>(context) + 1;
  FeatureMatrix out;
  out.frame_shift_s = x.frame_shift_s;
  out.data.resize(f * width, t_len);
  for (Index t = 0; t < t_len; ++t) {
    for (Index c = -context; c <= context; ++c) {
      const Index src = std::clamp<Index>(t + c, 0, t_len - 1);
      out.data.block((c + context) * f, t, f, 1) = x.data.col(src);
    }
  }
  return out;
}

FeatureMatrix subsample(const FeatureMatrix& x, int factor) {
  if (factor < 1) throw DataError("subsample factor must be >= 1");
  const Index t_len = x.data.cols();
  const Index t_out = (t_len + factor - 1) / factor;
  FeatureMatrix out;
  out.frame_shift_s = x.frame_shift_s * factor;
  out.data.resize(x.data.rows(), t_out);
  for (Index t = 0; t < t_out; ++t) out.data.col(t) = x.data.col(t * factor);
  return out;
}

FeatureMatrix extract_pipeline(const Waveform& w, const FeatureConfig& cfg) {
  return subsample(splice(logmel_extract(w, cfg), cfg.context), cfg.subsample);
}

}  // namespace chaindiar
