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

#include <map>
#include <string>
#include <vector>

#include "chaindiar/types.hpp"

namespace chaindiar {

struct RttmSegment {
  std::string file_id;
  Scalar onset_s = 0.0;
  Scalar duration_s = 0.0;
  std::string speaker;
};

/// Exact RTTM line: SPEAKER <file> 1 <onset:.3f> <dur:.3f> <NA> <NA>
/// <speaker> <NA> <NA>, single spaces, newline terminated.
std::string format_rttm_line(const RttmSegment& seg);
std::vector<RttmSegment> read_rttm(const std::string& path);
void write_rttm(const std::string& path,
                const std::vector<RttmSegment>& segments);

/// Maximal runs of active frames become segments.
std::vector<RttmSegment> activity_to_segments(
    const ActivityMatrix& a, const std::vector<std::string>& speaker_names,
    const std::string& file_id);

/// Rasterization: frame t of a speaker is active iff the frame midpoint
/// lies inside one of that speaker's segments. Speakers are ordered by
/// first appearance; segments beyond t_frames are truncated with a warning
/// on stderr.
struct FileActivity {
  ActivityMatrix activity;
  std::vector<std::string> speakers;
};
FileActivity segments_to_activity(const std::vector<RttmSegment>& segments,
                                  Scalar frame_shift_s, Index t_frames);

/// Scored-time-normalized DER report. Raw second counts are kept so that
/// per-file reports can be merged (sum times, then normalize).
struct DerReport {
  Scalar miss_s = 0.0;
  Scalar falarm_s = 0.0;
  Scalar confusion_s = 0.0;
  Scalar scored_speaker_time_s = 0.0;
  Scalar scored_speech_time_s = 0.0;
  Scalar sad_miss_s = 0.0;
  Scalar sad_falarm_s = 0.0;

  Scalar miss_pct() const { return pct(miss_s, scored_speaker_time_s); }
  Scalar falarm_pct() const { return pct(falarm_s, scored_speaker_time_s); }
  Scalar confusion_pct() const {
    return pct(confusion_s, scored_speaker_time_s);
  }
  Scalar der_pct() const {
    return miss_pct() + falarm_pct() + confusion_pct();
  }
  Scalar sad_miss_pct() const {
    return pct(sad_miss_s, scored_speech_time_s);
  }
  Scalar sad_falarm_pct() const {
    return pct(sad_falarm_s, scored_speech_time_s);
  }

 private:
  static Scalar pct(Scalar num, Scalar den) {
    return den > 0.0 ? 100.0 * num / den : 0.0;
  }
};

/// Frame-level DER at 10 ms resolution with a collar around reference
/// segment boundaries. Speaker mapping maximizes matched speaker time via
/// optimal assignment, re-derived per file. Overlap and SAD errors are
/// included. Throws DataError("nothing to score") without reference speech.
DerReport der(const std::vector<RttmSegment>& ref,
              const std::vector<RttmSegment>& hyp, Scalar collar_s = 0.25);

/// Same scoring, one report per file_id.
std::map<std::string, DerReport> der_per_file(
    const std::vector<RttmSegment>& ref, const std::vector<RttmSegment>& hyp,
    Scalar collar_s = 0.25);

DerReport merge_reports(const std::vector<DerReport>& reports);

/// Groups per-file reports by reference speaker count; each group's DER is
/// time-weighted (sums merged before normalizing).
std::map<int, DerReport> der_by_ref_count(
    const std::map<std::string, DerReport>& per_file,
    const std::map<std::string, int>& ref_counts);

/// Zeroes every hypothesis speaker row where the oracle SAD says
/// non-speech.
ActivityMatrix oracle_sad_filter(const ActivityMatrix& hyp,
                                 const BinaryVector& oracle_sad);

/// Speaker-count confusion matrix and diagonal accuracy.
struct CountingReport {
  std::map<std::pair<int, int>, long> matrix;  // (ref_n, hyp_n) -> count
  Scalar accuracy = 0.0;
};
CountingReport counting_report(
    const std::vector<std::pair<int, int>>& pairs);

/// Maximum total overlap achievable by an injective ref->hyp speaker
/// assignment (Kuhn-Munkres). Optionally returns the mapping
/// (ref index -> hyp index or -1).
Scalar max_matching_time(const Matrix& overlap_seconds,
                         std::vector<int>* mapping = nullptr);

/// Two-decimal DER/MI/FA/CF (+ SAD MI/FA) columns.
std::string format_der_report(const DerReport& report);
std::string format_counting_report(const CountingReport& report);

}  // namespace chaindiar
