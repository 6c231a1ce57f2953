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

#include "chaindiar/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "chaindiar/io.hpp"

namespace chaindiar {

namespace {
constexpr Scalar kScoreShift = 0.01;  // scoring frame resolution, seconds
}

std::string format_rttm_line(const RttmSegment& seg) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "SPEAKER %s 1 %.3f %.3f <NA> <NA> %s <NA> <NA>\n",
                seg.file_id.c_str(), seg.onset_s, seg.duration_s,
                seg.speaker.c_str());
  return buf;
}

std::vector<RttmSegment> read_rttm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rttm: " + path);
  std::vector<RttmSegment> segs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind, file_id, chan, onset, dur, f5, f6, speaker;
    if (!(ls >> kind >> file_id >> chan >> onset >> dur >> f5 >> f6 >>
          speaker))
      throw DataError("bad rttm line: " + line);
    if (kind != "SPEAKER") continue;
    RttmSegment seg;
    seg.file_id = file_id;
    try {
      seg.onset_s = std::stod(onset);
      seg.duration_s = std::stod(dur);
    } catch (const std::exception&) {
      throw DataError("bad rttm times: " + line);
    }
    seg.speaker = speaker;
    if (seg.duration_s <= 0.0)
      throw DataError("non-positive rttm duration: " + line);
    segs.push_back(std::move(seg));
  }
  return segs;
}

void write_rttm(const std::string& path,
                const std::vector<RttmSegment>& segments) {
  std::string out;
  for (const auto& seg : segments) out += format_rttm_line(seg);
  write_file_atomic(path, out);
}

std::vector<RttmSegment> activity_to_segments(
    const ActivityMatrix& a, const std::vector<std::string>& speaker_names,
    const std::string& file_id) {
  if (a.frame_shift_s <= 0.0)
    throw DataError("activity frame shift must be positive");
  if (static_cast<Index>(speaker_names.size()) != a.speakers())
    throw DataError("speaker name count does not match activity rows");
  std::vector<RttmSegment> segs;
  for (Index s = 0; s < a.speakers(); ++s) {
    Index t = 0;
    while (t < a.frames()) {
      if (!a.rows(s, t)) {
        ++t;
        continue;
      }
      Index end = t;
      while (end < a.frames() && a.rows(s, end)) ++end;
      RttmSegment seg;
      seg.file_id = file_id;
      seg.onset_s = static_cast<Scalar>(t) * a.frame_shift_s;
      seg.duration_s = static_cast<Scalar>(end - t) * a.frame_shift_s;
      seg.speaker = speaker_names[static_cast<std::size_t>(s)];
      segs.push_back(std::move(seg));
      t = end;
    }
  }
  return segs;
}

FileActivity segments_to_activity(const std::vector<RttmSegment>& segments,
                                  Scalar frame_shift_s, Index t_frames) {
  if (frame_shift_s <= 0.0) throw DataError("frame shift must be positive");
  FileActivity out;
  out.activity.frame_shift_s = frame_shift_s;
  std::map<std::string, Index> index_of;
  for (const auto& seg : segments)
    if (index_of.emplace(seg.speaker, static_cast<Index>(index_of.size()))
            .second)
      out.speakers.push_back(seg.speaker);
  out.activity.rows =
      BinaryMatrix::Zero(static_cast<Index>(out.speakers.size()), t_frames);

  bool warned = false;
  for (const auto& seg : segments) {
    const Index row = index_of.at(seg.speaker);
    const Scalar end_s = seg.onset_s + seg.duration_s;
    if (!warned && end_s > static_cast<Scalar>(t_frames) * frame_shift_s +
                               0.5 * frame_shift_s) {
      std::cerr << "warning: segment extends past " << t_frames
                << " frames; truncating\n";
      warned = true;
    }
    for (Index t = 0; t < t_frames; ++t) {
      const Scalar mid = (static_cast<Scalar>(t) + 0.5) * frame_shift_s;
      if (mid >= seg.onset_s && mid < end_s) out.activity.rows(row, t) = 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// optimal speaker assignment

Scalar max_matching_time(const Matrix& overlap_seconds,
                         std::vector<int>* mapping) {
  const Index n_ref = overlap_seconds.rows();
  const Index n_hyp = overlap_seconds.cols();
  if (mapping) mapping->assign(static_cast<std::size_t>(n_ref), -1);
  if (n_ref == 0 || n_hyp == 0) return 0.0;

  // Kuhn-Munkres on a square min-cost matrix; padding entries carry zero
  // benefit.
  const Index n = std::max(n_ref, n_hyp);
  const Scalar top = overlap_seconds.maxCoeff();
  Matrix cost = Matrix::Constant(n, n, top);
  cost.topLeftCorner(n_ref, n_hyp) =
      (top - overlap_seconds.array()).matrix();

  std::vector<Scalar> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Scalar> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> way(static_cast<std::size_t>(n) + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<Scalar> minv(static_cast<std::size_t>(n) + 1,
                             std::numeric_limits<Scalar>::infinity());
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      Index j1 = 0;
      Scalar delta = std::numeric_limits<Scalar>::infinity();
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) -
                           u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  Scalar total = 0.0;
  for (Index j = 1; j <= n; ++j) {
    const Index i = p[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= n_ref && j <= n_hyp) {
      total += overlap_seconds(i - 1, j - 1);
      if (mapping)
        (*mapping)[static_cast<std::size_t>(i - 1)] = static_cast<int>(j - 1);
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// DER

namespace {

struct FileSegments {
  std::vector<RttmSegment> ref;
  std::vector<RttmSegment> hyp;
};

std::map<std::string, FileSegments> group_by_file(
    const std::vector<RttmSegment>& ref, const std::vector<RttmSegment>& hyp) {
  std::map<std::string, FileSegments> files;
  for (const auto& seg : ref) files[seg.file_id].ref.push_back(seg);
  for (const auto& seg : hyp) files[seg.file_id].hyp.push_back(seg);
  return files;
}

// Rasterize with speakers in name order so assignment ties resolve
// deterministically.
FileActivity rasterize_sorted(std::vector<RttmSegment> segs, Index t_frames) {
  std::stable_sort(segs.begin(), segs.end(),
                   [](const RttmSegment& a, const RttmSegment& b) {
                     return a.speaker < b.speaker;
                   });
  return segments_to_activity(segs, kScoreShift, t_frames);
}

DerReport score_file(const FileSegments& fs, Scalar collar_s) {
  Scalar max_end = 0.0;
  for (const auto& seg : fs.ref)
    max_end = std::max(max_end, seg.onset_s + seg.duration_s);
  for (const auto& seg : fs.hyp)
    max_end = std::max(max_end, seg.onset_s + seg.duration_s);
  const Index t_frames =
      static_cast<Index>(std::ceil(max_end / kScoreShift - 1e-9));

  DerReport rep;
  if (t_frames == 0) return rep;

  const FileActivity ref = rasterize_sorted(fs.ref, t_frames);
  const FileActivity hyp = rasterize_sorted(fs.hyp, t_frames);
  const Index n_ref = ref.activity.speakers();
  const Index n_hyp = hyp.activity.speakers();

  // Frames whose midpoint falls within the collar of any reference segment
  // boundary are not scored.
  std::vector<Scalar> boundaries;
  for (const auto& seg : fs.ref) {
    boundaries.push_back(seg.onset_s);
    boundaries.push_back(seg.onset_s + seg.duration_s);
  }
  std::vector<char> scored(static_cast<std::size_t>(t_frames), 1);
  for (Index t = 0; t < t_frames; ++t) {
    const Scalar mid = (static_cast<Scalar>(t) + 0.5) * kScoreShift;
    for (const Scalar b : boundaries)
      if (std::abs(mid - b) <= collar_s) {
        scored[static_cast<std::size_t>(t)] = 0;
        break;
      }
  }

  Matrix overlap = Matrix::Zero(n_ref, n_hyp);
  for (Index t = 0; t < t_frames; ++t) {
    if (!scored[static_cast<std::size_t>(t)]) continue;
    for (Index r = 0; r < n_ref; ++r) {
      if (!ref.activity.rows(r, t)) continue;
      for (Index h = 0; h < n_hyp; ++h)
        if (hyp.activity.rows(h, t)) overlap(r, h) += kScoreShift;
    }
  }
  std::vector<int> mapping;
  max_matching_time(overlap, &mapping);

  long miss = 0, falarm = 0, confusion = 0, speaker_time = 0, speech_time = 0;
  long sad_miss = 0, sad_falarm = 0;
  for (Index t = 0; t < t_frames; ++t) {
    if (!scored[static_cast<std::size_t>(t)]) continue;
    int nr = 0, nh = 0, ncorrect = 0;
    for (Index r = 0; r < n_ref; ++r) nr += ref.activity.rows(r, t) ? 1 : 0;
    for (Index h = 0; h < n_hyp; ++h) nh += hyp.activity.rows(h, t) ? 1 : 0;
    for (Index r = 0; r < n_ref; ++r) {
      const int h = mapping.empty() ? -1 : mapping[static_cast<std::size_t>(r)];
      if (h >= 0 && ref.activity.rows(r, t) && hyp.activity.rows(h, t))
        ++ncorrect;
    }
    miss += std::max(0, nr - nh);
    falarm += std::max(0, nh - nr);
    confusion += std::min(nr, nh) - ncorrect;
    speaker_time += nr;
    if (nr >= 1) {
      ++speech_time;
      if (nh == 0) ++sad_miss;
    } else if (nh >= 1) {
      ++sad_falarm;
    }
  }
  rep.miss_s = miss * kScoreShift;
  rep.falarm_s = falarm * kScoreShift;
  rep.confusion_s = confusion * kScoreShift;
  rep.scored_speaker_time_s = speaker_time * kScoreShift;
  rep.scored_speech_time_s = speech_time * kScoreShift;
  rep.sad_miss_s = sad_miss * kScoreShift;
  rep.sad_falarm_s = sad_falarm * kScoreShift;
  return rep;
}

}  // namespace

std::map<std::string, DerReport> der_per_file(
    const std::vector<RttmSegment>& ref, const std::vector<RttmSegment>& hyp,
    Scalar collar_s) {
  std::map<std::string, DerReport> out;
  for (const auto& [file_id, fs] : group_by_file(ref, hyp))
    out.emplace(file_id, score_file(fs, collar_s));
  return out;
}

DerReport merge_reports(const std::vector<DerReport>& reports) {
  DerReport total;
  for (const auto& r : reports) {
    total.miss_s += r.miss_s;
    total.falarm_s += r.falarm_s;
    total.confusion_s += r.confusion_s;
    total.scored_speaker_time_s += r.scored_speaker_time_s;
    total.scored_speech_time_s += r.scored_speech_time_s;
    total.sad_miss_s += r.sad_miss_s;
    total.sad_falarm_s += r.sad_falarm_s;
  }
  return total;
}

DerReport der(const std::vector<RttmSegment>& ref,
              const std::vector<RttmSegment>& hyp, Scalar collar_s) {
  std::vector<DerReport> reports;
  for (const auto& [file_id, rep] : der_per_file(ref, hyp, collar_s))
    reports.push_back(rep);
  DerReport total = merge_reports(reports);
  if (total.scored_speaker_time_s <= 0.0) throw DataError("nothing to score");
  return total;
}

std::map<int, DerReport> der_by_ref_count(
    const std::map<std::string, DerReport>& per_file,
    const std::map<std::string, int>& ref_counts) {
  std::map<int, std::vector<DerReport>> groups;
  for (const auto& [file_id, rep] : per_file) {
    auto it = ref_counts.find(file_id);
    if (it == ref_counts.end())
      throw DataError("no reference speaker count for file " + file_id);
    groups[it->second].push_back(rep);
  }
  std::map<int, DerReport> out;
  for (const auto& [count, reports] : groups)
    out.emplace(count, merge_reports(reports));
  return out;
}

ActivityMatrix oracle_sad_filter(const ActivityMatrix& hyp,
                                 const BinaryVector& oracle_sad) {
  if (oracle_sad.size() != hyp.frames())
    throw DataError("oracle SAD length mismatch");
  ActivityMatrix out = hyp;
  for (Index t = 0; t < out.frames(); ++t)
    if (!oracle_sad(t))
      for (Index s = 0; s < out.speakers(); ++s) out.rows(s, t) = 0;
  return out;
}

CountingReport counting_report(
    const std::vector<std::pair<int, int>>& pairs) {
  CountingReport rep;
  long total = 0, diagonal = 0;
  for (const auto& [ref_n, hyp_n] : pairs) {
    if (ref_n < 1) throw DataError("reference speaker count must be >= 1");
    ++rep.matrix[{ref_n, hyp_n}];
    ++total;
    if (ref_n == hyp_n) ++diagonal;
  }
  rep.accuracy =
      total ? static_cast<Scalar>(diagonal) / static_cast<Scalar>(total) : 0.0;
  return rep;
}

std::string format_der_report(const DerReport& report) {
  char buf[256];
  std::string out = "   DER     MI     FA     CF  SAD-MI  SAD-FA  (%)\n";
  std::snprintf(buf, sizeof(buf), "%6.2f %6.2f %6.2f %6.2f %7.2f %7.2f\n",
                report.der_pct(), report.miss_pct(), report.falarm_pct(),
                report.confusion_pct(), report.sad_miss_pct(),
                report.sad_falarm_pct());
  out += buf;
  std::snprintf(buf, sizeof(buf), "scored speaker time: %.2f s\n",
                report.scored_speaker_time_s);
  out += buf;
  return out;
}

std::string format_counting_report(const CountingReport& report) {
  std::set<int> refs, hyps;
  for (const auto& [key, count] : report.matrix) {
    refs.insert(key.first);
    hyps.insert(key.second);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "speaker counting accuracy: %.1f%%\n",
                100.0 * report.accuracy);
  std::string out = buf;
  out += "ref\\hyp";
  for (int h : hyps) {
    std::snprintf(buf, sizeof(buf), "%6d", h);
    out += buf;
  }
  out += "\n";
  for (int r : refs) {
    std::snprintf(buf, sizeof(buf), "%7d", r);
    out += buf;
    for (int h : hyps) {
      auto it = report.matrix.find({r, h});
      std::snprintf(buf, sizeof(buf), "%6ld",
                    it == report.matrix.end() ? 0L : it->second);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace chaindiar
