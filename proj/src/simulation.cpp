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

#include "chaindiar/simulation.hpp"

#include <cmath>
#include <cstdio>

namespace chaindiar {

namespace {

constexpr Scalar kFrameShift = 0.01;  // activity resolution, seconds

// f0 bands per speaker slot. Slots cycle for > 4 speakers. Disjoint bands
// keep the parametric sources spectrally distinct within one mixture.
struct F0Band {
  double lo, hi;
};
constexpr F0Band kF0Bands[] = {
    {85.0, 115.0}, {150.0, 190.0}, {220.0, 265.0}, {300.0, 350.0}};

struct SpeakerVoice {
  double f0;
  double tilt;        // harmonic amplitude decay
  double noise_gain;  // breathiness
};

// One utterance of a harmonic stack plus white noise, with raised-cosine
// on/off ramps against clicks.
void render_utterance(std::vector<Scalar>& mix, Index start_sample,
                      Index n_samples, int sample_rate, double gain,
                      const SpeakerVoice& voice, Rng& rng) {
  const double f0 = voice.f0 * (1.0 + 0.06 * (uniform_real(rng) - 0.5));
  const int max_harmonics = 12;
  std::vector<double> amp, phase;
  std::vector<double> freq;
  double norm = 0.0;
  for (int h = 1; h <= max_harmonics; ++h) {
    const double f = h * f0;
    if (f > 0.45 * sample_rate) break;
    const double a = std::pow(voice.tilt, h - 1);
    freq.push_back(f);
    amp.push_back(a);
    phase.push_back(2.0 * M_PI * uniform_real(rng));
    norm += a;
  }
  const Index ramp = std::min<Index>(n_samples / 4, sample_rate / 50);
  for (Index i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double s = 0.0;
    for (std::size_t h = 0; h < freq.size(); ++h)
      s += amp[h] * std::sin(2.0 * M_PI * freq[h] * t + phase[h]);
    s /= norm;
    s += voice.noise_gain * (2.0 * uniform_real(rng) - 1.0);
    double env = 1.0;
    if (i < ramp)
      env = 0.5 - 0.5 * std::cos(M_PI * (i + 1.0) / (ramp + 1.0));
    else if (i >= n_samples - ramp)
      env = 0.5 - 0.5 * std::cos(M_PI * (n_samples - i) / (ramp + 1.0));
    mix[static_cast<std::size_t>(start_sample + i)] += gain * env * s;
  }
}

}  // namespace

Mixture simulate_mixture(const SimConfig& cfg, Rng& rng) {
  if (cfg.target_duration_s <= 0.0)
    throw DataError("simulation duration must be positive");
  if (cfg.n_speakers_min < 1 || cfg.n_speakers_max < cfg.n_speakers_min)
    throw DataError("bad speaker count range");
  if (cfg.utterance_min_s <= 0.0 || cfg.utterance_max_s < cfg.utterance_min_s)
    throw DataError("bad utterance length range");
  if (cfg.sample_rate_hz < 100 || cfg.sample_rate_hz % 100 != 0)
    throw DataError("sample rate must be a multiple of 100 Hz");

  const int n_speakers =
      cfg.n_speakers_min +
      (cfg.n_speakers_max > cfg.n_speakers_min
           ? static_cast<int>(uniform_int(
                 rng, cfg.n_speakers_max - cfg.n_speakers_min + 1))
           : 0);

  const Index t_frames =
      std::max<Index>(1, static_cast<Index>(std::llround(
                             cfg.target_duration_s / kFrameShift)));
  const Index samples_per_frame =
      static_cast<Index>(cfg.sample_rate_hz) / 100;
  const Index n_samples = t_frames * samples_per_frame;

  Mixture mix;
  mix.waveform.sample_rate_hz = cfg.sample_rate_hz;
  mix.waveform.samples.assign(static_cast<std::size_t>(n_samples), 0.0);
  mix.activity.rows = BinaryMatrix::Zero(n_speakers, t_frames);
  mix.activity.frame_shift_s = kFrameShift;

  const double per_speaker_gain = 0.5 / n_speakers;

  for (int s = 0; s < n_speakers; ++s) {
    char name[16];
    std::snprintf(name, sizeof(name), "spk%d", s + 1);
    mix.speaker_ids.emplace_back(name);

    const F0Band& band = kF0Bands[s % 4];
    SpeakerVoice voice;
    voice.f0 = uniform_real(rng, band.lo, band.hi);
    voice.tilt = uniform_real(rng, 0.55, 0.8);
    voice.noise_gain = uniform_real(rng, 0.01, 0.04);

    // Alternate pause / utterance until the end of the mixture. Boundaries
    // are quantized to the 10 ms grid so labels are exact.
    Index t = 0;
    while (t < t_frames) {
      const Index pause_frames = static_cast<Index>(
          std::llround(exponential(rng, cfg.pause_scale_s) / kFrameShift));
      const Index utt_frames = std::max<Index>(
          1, static_cast<Index>(std::llround(
                 uniform_real(rng, cfg.utterance_min_s, cfg.utterance_max_s) /
                 kFrameShift)));
      t += pause_frames;
      if (t >= t_frames) break;
      const Index end = std::min<Index>(t + utt_frames, t_frames);
      mix.activity.rows.block(s, t, 1, end - t).setOnes();
      render_utterance(mix.waveform.samples, t * samples_per_frame,
                       (end - t) * samples_per_frame, cfg.sample_rate_hz,
                       per_speaker_gain, voice, rng);
      t = end;
    }
  }
  return mix;
}

Mixture simulate_mixture(const SimConfig& cfg) {
  Rng rng(cfg.seed);
  return simulate_mixture(cfg, rng);
}

Scalar overlap_ratio(const ActivityMatrix& a) {
  Index speech = 0, overlapped = 0;
  for (Index t = 0; t < a.frames(); ++t) {
    int n = 0;
    for (Index s = 0; s < a.speakers(); ++s) n += a.rows(s, t) ? 1 : 0;
    if (n >= 1) ++speech;
    if (n >= 2) ++overlapped;
  }
  if (speech == 0) throw DataError("no speech");
  return static_cast<Scalar>(overlapped) / static_cast<Scalar>(speech);
}

}  // namespace chaindiar
