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

#include <complex>
#include <vector>

#include "chaindiar/io.hpp"
#include "chaindiar/types.hpp"

namespace chaindiar {

/// Log-mel front end configuration. The spliced, subsampled output has
/// dimension n_mels * (2 * context + 1) and a frame shift of
/// frame_shift_ms * subsample milliseconds.
struct FeatureConfig {
  int n_mels = 23;
  int frame_length_ms = 25;
  int frame_shift_ms = 10;
  int context = 7;
  int subsample = 10;

  int spliced_dim() const { return n_mels * (2 * context + 1); }
};

/// Log mel-filterbank energies, one column per frame.
///
/// Conventions (fixed, deterministic): Hamming window, FFT zero-padded to
/// the next power of two, power spectrum, triangular HTK-mel filters from
/// 0 Hz to Nyquist, floor of 1e-10 added to each filter energy before log.
FeatureMatrix logmel_extract(const Waveform& w, const FeatureConfig& cfg);

/// Frame splicing: column t becomes the stack of columns t-context ...
/// t+context, with edge columns replicated at the sequence boundaries.
FeatureMatrix splice(const FeatureMatrix& x, int context);

/// Keeps columns 0, factor, 2*factor, ... and scales frame_shift_s by
/// factor. T' = ceil(T / factor).
FeatureMatrix subsample(const FeatureMatrix& x, int factor);

/// Full front end: logmel -> splice -> subsample.
FeatureMatrix extract_pipeline(const Waveform& w, const FeatureConfig& cfg);

/// Triangular HTK-mel filterbank as an (n_mels x n_fft/2+1) weight matrix.
/// Exposed so tests can inspect band edges.
Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate_hz);

/// Hz <-> HTK mel.
inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

/// In-place radix-2 FFT used by the front end (n must be a power of two).
void fft_radix2(std::vector<std::complex<double>>& a);

}  // namespace chaindiar
