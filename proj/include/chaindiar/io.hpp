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

#include "chaindiar/types.hpp"

namespace chaindiar {

/// Mono audio, samples in [-1, 1].
struct Waveform {
  std::vector<Scalar> samples;
  int sample_rate_hz = 8000;

  Scalar duration_s() const {
    return static_cast<Scalar>(samples.size()) / sample_rate_hz;
  }
};

/// Reads a mono 16-bit PCM WAV file. Throws DataError on anything else.
Waveform read_wav(const std::string& path);

/// Writes 16-bit PCM mono. Samples are clamped to [-1, 1]. The write is
/// atomic: a temp file is renamed into place.
void write_wav(const std::string& path, const Waveform& w);

/// Plain-text matrix fixture format: first line "F T", then F rows of T
/// space-separated decimals.
Matrix read_matrix_txt(const std::string& path);
void write_matrix_txt(const std::string& path, const Matrix& m);

/// One training/inference item: id plus the paths that define it.
struct ManifestEntry {
  std::string id;
  std::string wav_path;
  std::string rttm_path;
};

/// Manifest format: one line per mixture, "id wav_path rttm_path".
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

/// Atomically writes `content` to `path` (write temp, rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace chaindiar
