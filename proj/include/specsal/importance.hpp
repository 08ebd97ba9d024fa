// include/specsal/importance.hpp
//
// Copyright 2026  The Specsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Per-word importance maps. The bubble route correlates per-point audibility
// with per-word correctness across many mixtures; the energy route thresholds
// the smoothed magnitude inside the word's aligned frames.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "specsal/bubble.hpp"
#include "specsal/dsp.hpp"
#include "specsal/matrix.hpp"
#include "specsal/mel.hpp"
#include "specsal/stats.hpp"

namespace specsal {

// J mixtures x K words of binary correctness for one utterance.
struct IntelligibilityTable {
  MatB values;
  std::vector<std::string> words;

  int num_mixtures() const { return values.rows; }
  int num_words() const { return values.cols; }
};

struct ImportanceMap {
  MatD r;
  MatD p;
  std::string word_id;
  std::string method;  // "bubble" or "energy"
};

struct BinaryImportanceMap {
  MatB mask;
  double threshold = 0.0;
};

// Half-open frame range [start_frame, end_frame).
struct WordSpan {
  std::string word_id;
  std::string text;
  int start_frame = 0;
  int end_frame = 0;
  int phoneme_count = -1;  // -1 when the word is missing from the lexicon

  int length() const { return end_frame - start_frame; }

  void validate(int t_frames) const {
    if (start_frame < 0 || end_frame < start_frame || end_frame > t_frames) {
      throw DataError("word span '" + text + "' [" + std::to_string(start_frame) + ", " +
                      std::to_string(end_frame) + ") outside 0.." +
                      std::to_string(t_frames));
    }
  }
};

// Streaming sufficient statistics for the per-point correlations of one
// utterance: audibility fields arrive one mixture at a time and only
// per-word sums are retained.
class BubbleCorrelationAccumulator {
 public:
  BubbleCorrelationAccumulator(int f_bins, int t_frames, int n_words)
      : f_bins_(f_bins),
        t_frames_(t_frames),
        sum_d_(std::size_t(f_bins) * std::size_t(t_frames), 0.0),
        sum_d2_(std::size_t(f_bins) * std::size_t(t_frames), 0.0),
        sum_d_pos_(std::size_t(n_words)),
        n_pos_(std::size_t(n_words), 0) {
    if (f_bins <= 0 || t_frames <= 0 || n_words <= 0) {
      throw DataError("correlation accumulator: empty shape");
    }
    for (auto& v : sum_d_pos_) {
      v.assign(std::size_t(f_bins) * std::size_t(t_frames), 0.0);
    }
  }

  int num_words() const { return int(sum_d_pos_.size()); }
  int num_mixtures() const { return j_; }

  void add(const MatF& audibility, const std::vector<std::uint8_t>& correctness) {
    if (audibility.rows != f_bins_ || audibility.cols != t_frames_) {
      throw DataError("correlation accumulator: audibility shape mismatch");
    }
    if (int(correctness.size()) != num_words()) {
      throw DataError("correlation accumulator: correctness length mismatch");
    }
    const std::size_t n = sum_d_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = double(audibility.data[i]);
      sum_d_[i] += d;
      sum_d2_[i] += d * d;
    }
    for (int k = 0; k < num_words(); ++k) {
      if (!correctness[std::size_t(k)]) continue;
      auto& acc = sum_d_pos_[std::size_t(k)];
      for (std::size_t i = 0; i < n; ++i) acc[i] += double(audibility.data[i]);
      ++n_pos_[std::size_t(k)];
    }
    ++j_;
  }

  // Correlation and two-sided p-value maps for one word column.
  ImportanceMap finalize(int word, const std::string& word_id) const {
    if (word < 0 || word >= num_words()) {
      throw DataError("correlation accumulator: word index out of range");
    }
    if (j_ < 3) throw DataError("correlation accumulator: need at least 3 mixtures");

    ImportanceMap map;
    map.word_id = word_id;
    map.method = "bubble";
    map.r = MatD(f_bins_, t_frames_);
    map.p = MatD(f_bins_, t_frames_);

    const double jn = double(j_);
    const double np = double(n_pos_[std::size_t(word)]);
    const double s_yy = np * (1.0 - np / jn);
    if (s_yy <= 0.0) {
      map.r.fill(0.0);
      map.p.fill(1.0);
      logging::warn("word '" + word_id + "': correctness constant across " +
                    std::to_string(j_) + " mixtures; importance map is degenerate");
      return map;
    }

    const auto& pos = sum_d_pos_[std::size_t(word)];
    const double dof = jn - 2.0;
    for (std::size_t i = 0; i < sum_d_.size(); ++i) {
      const double s_dd = sum_d2_[i] - sum_d_[i] * sum_d_[i] / jn;
      const double s_dy = pos[i] - sum_d_[i] * np / jn;
      if (s_dd <= 0.0) {
        map.r.data[i] = 0.0;
        map.p.data[i] = 1.0;
        continue;
      }
      double r = s_dy / std::sqrt(s_dd * s_yy);
      r = std::clamp(r, -1.0, 1.0);
      const double denom = 1.0 - r * r;
      map.r.data[i] = r;
      if (denom <= 0.0) {
        map.p.data[i] = 0.0;
      } else {
        map.p.data[i] = student_t_two_sided_p(r * std::sqrt(dof / denom), dof);
      }
    }
    return map;
  }

 private:
  int f_bins_;
  int t_frames_;
  int j_ = 0;
  std::vector<double> sum_d_;
  std::vector<double> sum_d2_;
  std::vector<std::vector<double>> sum_d_pos_;
  std::vector<std::int64_t> n_pos_;
};

// Convenience wrapper over the accumulator for in-memory stacks.
inline ImportanceMap compute_bubble_importance(const std::vector<MatF>& audibility_stack,
                                               const IntelligibilityTable& table,
                                               int word) {
  if (audibility_stack.size() < 3) {
    throw DataError("compute_bubble_importance: need at least 3 mixtures");
  }
  if (int(audibility_stack.size()) != table.num_mixtures()) {
    throw DataError("compute_bubble_importance: mixture count mismatch");
  }
  if (word < 0 || word >= table.num_words()) {
    throw DataError("compute_bubble_importance: word index out of range");
  }
  BubbleCorrelationAccumulator acc(audibility_stack[0].rows, audibility_stack[0].cols,
                                   table.num_words());
  std::vector<std::uint8_t> row(std::size_t(table.num_words()));
  for (int j = 0; j < table.num_mixtures(); ++j) {
    for (int k = 0; k < table.num_words(); ++k) row[std::size_t(k)] = table.values(j, k);
    acc.add(audibility_stack[std::size_t(j)], row);
  }
  return acc.finalize(word, table.words[std::size_t(word)]);
}

inline BinaryImportanceMap threshold_bubble_map(const ImportanceMap& map, double t) {
  if (!(t > 0.0) || t > 1.0) {
    throw DataError("threshold_bubble_map: threshold must be in (0, 1]");
  }
  require_same_shape(map.r, map.p, "importance map r/p");
  BinaryImportanceMap out;
  out.threshold = t;
  out.mask = MatB(map.r.rows, map.r.cols);
  for (std::size_t i = 0; i < out.mask.data.size(); ++i) {
    out.mask.data[i] = (map.r.data[i] > 0.0 && map.p.data[i] < t) ? 1 : 0;
  }
  return out;
}

// Magnitude spectrogram smoothed across frequency by the mel filterbank.
inline MatD smoothed_magnitude(const Spectrogram& spec, const MelFilterbank& fb) {
  return mel_smooth(magnitude(spec), fb);
}

inline BinaryImportanceMap energy_importance_from_smoothed(const MatD& smoothed,
                                                           const WordSpan& span,
                                                           double t_db) {
  span.validate(smoothed.cols);
  BinaryImportanceMap out;
  out.threshold = t_db;
  out.mask = MatB(smoothed.rows, smoothed.cols);
  out.mask.fill(0);
  if (span.length() == 0) {
    logging::warn("word '" + span.text + "': empty aligned span; energy map is all zero");
    return out;
  }
  double ref = 0.0;
  for (double v : smoothed.data) ref = std::max(ref, v);
  const double cut = db_to_magnitude(t_db) * ref;
  for (int f = 0; f < smoothed.rows; ++f) {
    for (int t = span.start_frame; t < span.end_frame; ++t) {
      if (smoothed(f, t) > cut) out.mask(f, t) = 1;
    }
  }
  return out;
}

inline BinaryImportanceMap compute_energy_importance(const Spectrogram& clean_spec,
                                                     const WordSpan& span,
                                                     const MelFilterbank& fb,
                                                     double t_db) {
  return energy_importance_from_smoothed(smoothed_magnitude(clean_spec, fb), span, t_db);
}

}  // namespace specsal
