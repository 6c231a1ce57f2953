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

#include <string>
#include <vector>

#include "chaindiar/io.hpp"
#include "chaindiar/rng.hpp"
#include "chaindiar/types.hpp"

namespace chaindiar {

/// Mixture generator configuration.
///
/// Each speaker alternates exponential pauses (mean pause_scale_s) with
/// utterances of uniform length in utterance_len_range_s. The default
/// pause_scale_s was calibrated by Monte-Carlo sweep so that two-speaker
/// mixtures average roughly 30% overlap ratio.
struct SimConfig {
  int n_speakers_min = 2;
  int n_speakers_max = 2;
  Scalar target_duration_s = 90.0;
  Scalar pause_scale_s = 3.5;
  Scalar utterance_min_s = 1.0;
  Scalar utterance_max_s = 5.0;
  int sample_rate_hz = 8000;
  std::uint64_t seed = 1;
};

/// One generated mixture: audio, 10 ms ground-truth activity, speaker ids.
struct Mixture {
  Waveform waveform;
  ActivityMatrix activity;
  std::vector<std::string> speaker_ids;
};

/// Generates a mixture. Pure function of (cfg, rng state): the same seed
/// always yields a bit-identical result.
Mixture simulate_mixture(const SimConfig& cfg, Rng& rng);

/// Convenience overload seeding an Rng from cfg.seed.
Mixture simulate_mixture(const SimConfig& cfg);

/// Fraction of speech frames (>= 1 active speaker) that carry overlapped
/// speech (>= 2 active speakers). Throws DataError("no speech") when no
/// frame has an active speaker.
Scalar overlap_ratio(const ActivityMatrix& a);

}  // namespace chaindiar
