// include/specsal/metrics.hpp
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

// Evaluation bookkeeping: dropped-energy fractions, the per-unit-energy
// accuracy deltas and their sum, threshold sweeps, accuracy-vs-energy
// curves and word-size transition statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specsal/masks.hpp"
#include "specsal/matrix.hpp"

namespace specsal {

// Masked-mixture outcome for one (word, method, variant, threshold) cell.
// a_o is absent for single-word utterances, where "the other words" do not
// exist; such records are excluded from delta means and counted.
struct EvalRecord {
  std::string utterance_id;
  std::string word_id;
  MaskMethod method = MaskMethod::kBubble;
  MaskVariant variant = MaskVariant::kLerf;
  double threshold = 0.0;  // grid value: p-value (bubble) or t_dB (energy)
  double a_w = 0.0;
  std::optional<double> a_o;
  double e_drop = 0.0;
};

// Fraction of clean spectrogram energy under noised mask points.
inline double energy_drop_fraction(const MatD& clean_power, const MatD& mask_values,
                                   double mask_cut) {
  require_same_shape(clean_power, mask_values, "energy fraction power/mask");
  double total = 0.0, dropped = 0.0;
  for (std::size_t i = 0; i < clean_power.data.size(); ++i) {
    total += clean_power.data[i];
    if (mask_values.data[i] > mask_cut) dropped += clean_power.data[i];
  }
  if (total <= 0.0) throw DataError("energy_drop_fraction: silent utterance");
  return dropped / total;
}

inline double energy_drop_fraction(const MatD& clean_power, const NoiseMask& mask) {
  return energy_drop_fraction(clean_power, mask.values, mask.config.mask_cut());
}

// Sensitivity-analysis variant: each point contributes in proportion to its
// noise gain instead of a hard cut.
inline double energy_drop_fraction_continuous(const MatD& clean_power,
                                              const MatD& mask_values) {
  require_same_shape(clean_power, mask_values, "energy fraction power/mask");
  double total = 0.0, dropped = 0.0;
  for (std::size_t i = 0; i < clean_power.data.size(); ++i) {
    total += clean_power.data[i];
    dropped += clean_power.data[i] * mask_values.data[i];
  }
  if (total <= 0.0) throw DataError("energy_drop_fraction: silent utterance");
  return dropped / total;
}

inline std::optional<double> delta_lerf(double a_w, double a_o, double e_lerf) {
  if (e_lerf >= 1.0) return std::nullopt;
  return (a_w - a_o) / (1.0 - e_lerf);
}

inline std::optional<double> delta_morf(double a_o, double a_w, double e_morf) {
  if (e_morf <= 0.0) return std::nullopt;
  return (a_o - a_w) / e_morf;
}

struct SSBMRow {
  MaskMethod method = MaskMethod::kBubble;
  double threshold = 0.0;
  std::optional<double> mean_delta_lerf;
  std::optional<double> mean_delta_morf;
  std::optional<double> ssbm;
  int n_lerf = 0;  // records entering each mean
  int n_morf = 0;
  int excluded_lerf = 0;  // undefined deltas or missing a_o
  int excluded_morf = 0;
};

struct SSBMBest {
  double threshold = 0.0;
  double ssbm = 0.0;
};

struct SSBMReport {
  std::vector<SSBMRow> rows;
  std::map<std::string, SSBMBest> best;  // keyed by method name

  const SSBMBest* best_for(MaskMethod m) const {
    auto it = best.find(to_string(m));
    return it == best.end() ? nullptr : &it->second;
  }
};

// Per (method, threshold): average the defined deltas over words, sum the
// two means, and pick the per-method argmax (ties toward the smaller
// threshold, which ascending iteration gives for free).
inline SSBMReport sweep_thresholds(const std::vector<EvalRecord>& records) {
  struct Agg {
    double sum_lerf = 0.0, sum_morf = 0.0;
    int n_lerf = 0, n_morf = 0, excl_lerf = 0, excl_morf = 0;
  };
  std::map<std::string, std::map<double, Agg>> by_method;
  for (const auto& rec : records) {
    Agg& agg = by_method[to_string(rec.method)][rec.threshold];
    if (rec.variant == MaskVariant::kLerf) {
      const auto d = rec.a_o ? delta_lerf(rec.a_w, *rec.a_o, rec.e_drop) : std::nullopt;
      if (d) {
        agg.sum_lerf += *d;
        ++agg.n_lerf;
      } else {
        ++agg.excl_lerf;
      }
    } else {
      const auto d = rec.a_o ? delta_morf(*rec.a_o, rec.a_w, rec.e_drop) : std::nullopt;
      if (d) {
        agg.sum_morf += *d;
        ++agg.n_morf;
      } else {
        ++agg.excl_morf;
      }
    }
  }

  SSBMReport report;
  for (const auto& [method, grid] : by_method) {
    bool have_best = false;
    SSBMBest best;
    for (const auto& [threshold, agg] : grid) {
      SSBMRow row;
      row.method = method == "bubble" ? MaskMethod::kBubble : MaskMethod::kEnergy;
      row.threshold = threshold;
      row.n_lerf = agg.n_lerf;
      row.n_morf = agg.n_morf;
      row.excluded_lerf = agg.excl_lerf;
      row.excluded_morf = agg.excl_morf;
      if (agg.n_lerf > 0) row.mean_delta_lerf = agg.sum_lerf / agg.n_lerf;
      if (agg.n_morf > 0) row.mean_delta_morf = agg.sum_morf / agg.n_morf;
      if (row.mean_delta_lerf && row.mean_delta_morf) {
        row.ssbm = *row.mean_delta_lerf + *row.mean_delta_morf;
        if (!have_best || *row.ssbm > best.ssbm) {
          best = {threshold, *row.ssbm};
          have_best = true;
        }
      }
      report.rows.push_back(row);
    }
    if (have_best) report.best[method] = best;
  }
  return report;
}

struct AccuracyBin {
  int percent = 0;  // obscured energy rounded to the nearest percent
  double mean_accuracy = 0.0;
  int count = 0;
};

using AccuracyCurve = std::vector<AccuracyBin>;

inline AccuracyCurve accuracy_by_energy_bin(
    const std::vector<std::pair<double, double>>& fraction_accuracy) {
  std::map<int, std::pair<double, int>> bins;
  for (const auto& [fraction, accuracy] : fraction_accuracy) {
    if (fraction < 0.0 || fraction > 1.0) {
      throw DataError("accuracy_by_energy_bin: fraction outside [0,1]");
    }
    auto& [sum, count] = bins[int(std::lround(100.0 * fraction))];
    sum += accuracy;
    ++count;
  }
  AccuracyCurve curve;
  for (const auto& [percent, agg] : bins) {
    curve.push_back({percent, agg.first / agg.second, agg.second});
  }
  return curve;
}

// Threshold at which a word's recognition stabilizes across the sweep.
// LeRF: start of the maximal all-correct suffix of the ascending grid.
// MoRF: end of the maximal all-correct prefix. Words never stable are
// undefined and excluded upstream.
inline std::optional<double> transition_threshold(const std::vector<std::uint8_t>& correct,
                                                  const std::vector<double>& grid,
                                                  MaskVariant variant) {
  if (correct.size() != grid.size() || grid.empty()) {
    throw DataError("transition_threshold: grid/correctness size mismatch");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw DataError("transition_threshold: grid must be strictly ascending");
    }
  }
  if (variant == MaskVariant::kLerf) {
    if (!correct.back()) return std::nullopt;
    std::size_t start = grid.size() - 1;
    while (start > 0 && correct[start - 1]) --start;
    return grid[start];
  }
  if (!correct.front()) return std::nullopt;
  std::size_t end = 0;
  while (end + 1 < grid.size() && correct[end + 1]) ++end;
  return grid[end];
}

struct PhonemeStat {
  std::string word_id;
  int phoneme_count = -1;
  std::optional<double> lerf_transition;
  std::optional<double> morf_transition;
};

struct PhonemeTrendRow {
  int phoneme_count = 0;
  std::optional<double> mean_lerf;
  std::optional<double> mean_morf;
  int n_lerf = 0;
  int n_morf = 0;
};

// Mean transition thresholds grouped by phoneme count. Words missing from
// the lexicon (count < 0) and undefined transitions are skipped.
inline std::vector<PhonemeTrendRow> phoneme_trend(const std::vector<PhonemeStat>& stats) {
  struct Agg {
    double sum_l = 0.0, sum_m = 0.0;
    int n_l = 0, n_m = 0;
  };
  std::map<int, Agg> by_count;
  for (const auto& s : stats) {
    if (s.phoneme_count < 0) continue;
    Agg& agg = by_count[s.phoneme_count];
    if (s.lerf_transition) {
      agg.sum_l += *s.lerf_transition;
      ++agg.n_l;
    }
    if (s.morf_transition) {
      agg.sum_m += *s.morf_transition;
      ++agg.n_m;
    }
  }
  std::vector<PhonemeTrendRow> rows;
  for (const auto& [count, agg] : by_count) {
    PhonemeTrendRow row;
    row.phoneme_count = count;
    row.n_lerf = agg.n_l;
    row.n_morf = agg.n_m;
    if (agg.n_l > 0) row.mean_lerf = agg.sum_l / agg.n_l;
    if (agg.n_m > 0) row.mean_morf = agg.sum_m / agg.n_m;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace specsal
