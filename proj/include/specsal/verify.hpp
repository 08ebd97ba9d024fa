// include/specsal/verify.hpp
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

// Self-verification: run the full pipeline on the generated synthetic corpus
// and check the invariants that hold by construction there. Ground truth is
// known exactly, so failures point at the toolkit, not the data.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "specsal/config.hpp"
#include "specsal/pipeline.hpp"
#include "specsal/stats.hpp"
#include "specsal/synth.hpp"

namespace specsal {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  double elapsed_s = 0.0;

  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return !checks.empty();
  }
};

// Verification bounds. The statistical ones hold with wide margin for the
// fixed synthetic layout and any seed; the runtime bound keeps the check
// usable as a routine gate.
inline constexpr double kVerifyMinAuc = 0.90;
inline constexpr double kVerifyMinAucZ = 5.0;
inline constexpr double kVerifyCurveGap = 0.25;
inline constexpr int kVerifyCurveMinCount = 1;
inline constexpr double kVerifyMaxSeconds = 600.0;

// The synthetic words are short tone complexes, so probing uses dense, small
// bubbles. The density keeps word decisions split across mixtures instead of
// almost always right, and with large regions spanning roughly twelve bubble
// widths in mel the per-point correlations stay moderate while the
// quarter-size regions saturate. The sweep grid reaches below the default
// floor because at a thousand mixtures even the moderate correlations carry
// p-values a decade or two under 1e-8; the small regions still pin to the
// extended floor, which is the contrast the checks rely on.
inline ExperimentConfig verify_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.bubble.bubbles_per_second = 240.0;
  cfg.bubble.sigma_time_ms = 30.0;
  cfg.bubble.sigma_mel = 40.0;
  cfg.mixtures_per_utterance = 1000;
  cfg.bubble_grid.resize(37);
  for (int i = 0; i < 37; ++i) {
    cfg.bubble_grid[std::size_t(i)] = std::pow(10.0, -12.0 + i / 3.0);
  }
  cfg.bubble_grid.back() = 1.0;
  cfg.validate();
  return cfg;
}

namespace detail {

inline std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline VerifyCheck check_importance_auc(Pipeline& pipe) {
  VerifyCheck check;
  check.name = "importance-auc";
  double min_auc = 1.0;
  double min_z = std::numeric_limits<double>::infinity();
  std::string worst;
  const auto& utts = pipe.corpus().utterances;
  for (std::size_t u = 0; u < utts.size(); ++u) {
    const UttData utt = pipe.make_utt(u);
    for (std::size_t k = 0; k < utt.tokens.size(); ++k) {
      const MatD r = pipe.read_map(utt.word_uid(k) + ".r");
      const MatB& planted = utt.oracle.planted[k];
      std::vector<std::uint8_t> labels(planted.data.begin(), planted.data.end());
      const AucResult auc = ranking_auc(r.data, labels);
      const double z = (auc.auc - 0.5) / auc.stderr_hm;
      if (auc.auc < min_auc) {
        min_auc = auc.auc;
        worst = utt.word_uid(k);
      }
      min_z = std::min(min_z, z);
    }
  }
  check.pass = min_auc >= kVerifyMinAuc && min_z >= kVerifyMinAucZ;
  check.detail = "min AUC " + fmt3(min_auc) + " (worst word " + worst + ", bound " +
                 fmt3(kVerifyMinAuc) + "), min z " + fmt3(min_z) + " (bound " +
                 fmt3(kVerifyMinAucZ) + ")";
  return check;
}

inline VerifyCheck check_ssbm_ordering(const SSBMReport& ssbm) {
  VerifyCheck check;
  check.name = "ssbm-ordering";
  const SSBMBest* bubble = ssbm.best_for(MaskMethod::kBubble);
  const SSBMBest* energy = ssbm.best_for(MaskMethod::kEnergy);
  if (!bubble || !energy) {
    check.detail = "missing best threshold for a method";
    return check;
  }
  check.pass = bubble->ssbm > energy->ssbm;
  check.detail = "best bubble " + fmt3(bubble->ssbm) + " (threshold " +
                 fmt3(bubble->threshold) + ") vs best energy " + fmt3(energy->ssbm) +
                 " (threshold " + fmt3(energy->threshold) + " dB)";
  return check;
}

inline VerifyCheck check_curve_separation(const std::vector<EvalRecord>& records) {
  VerifyCheck check;
  check.name = "curve-separation";
  std::map<int, AccuracyBin> lerf, morf;
  for (MaskVariant variant : {MaskVariant::kLerf, MaskVariant::kMorf}) {
    std::vector<std::pair<double, double>> pairs;
    for (const EvalRecord& rec : records) {
      if (rec.method == MaskMethod::kBubble && rec.variant == variant) {
        pairs.push_back({rec.e_drop, rec.a_w});
      }
    }
    auto& dest = variant == MaskVariant::kLerf ? lerf : morf;
    for (const AccuracyBin& bin : accuracy_by_energy_bin(pairs)) dest[bin.percent] = bin;
  }

  int matched = 0;
  int ordered = 0;
  double gap_sum = 0.0;
  for (const auto& [percent, lbin] : lerf) {
    auto it = morf.find(percent);
    if (it == morf.end()) continue;
    if (lbin.count < kVerifyCurveMinCount || it->second.count < kVerifyCurveMinCount) {
      continue;
    }
    ++matched;
    if (lbin.mean_accuracy >= it->second.mean_accuracy) ++ordered;
    gap_sum += lbin.mean_accuracy - it->second.mean_accuracy;
  }
  const double mean_gap = matched > 0 ? gap_sum / matched : 0.0;
  check.pass = matched > 0 && ordered == matched && mean_gap >= kVerifyCurveGap;
  check.detail = std::to_string(ordered) + "/" + std::to_string(matched) +
                 " matched bins ordered, mean gap " + fmt3(mean_gap) + " (bound " +
                 fmt3(kVerifyCurveGap) + ")";
  return check;
}

inline VerifyCheck check_region_size_trend(Pipeline& pipe) {
  VerifyCheck check;
  check.name = "region-size-trend";
  std::vector<PhonemeStat> stats;
  const auto& lexicon = pipe.corpus().lexicon;
  for (const auto& row : pipe.read_transitions()) {
    PhonemeStat s;
    s.word_id = row.word_uid;
    auto lex = lexicon.find(row.text);
    s.phoneme_count = lex == lexicon.end() ? -1 : lex->second;
    s.lerf_transition = row.lerf;
    s.morf_transition = row.morf;
    stats.push_back(std::move(s));
  }
  std::optional<double> big, small;
  int n_big = 0, n_small = 0;
  for (const PhonemeTrendRow& row : phoneme_trend(stats)) {
    if (row.phoneme_count == 6) {
      big = row.mean_lerf;
      n_big = row.n_lerf;
    } else if (row.phoneme_count == 2) {
      small = row.mean_lerf;
      n_small = row.n_lerf;
    }
  }
  if (!big || !small) {
    check.detail = "missing transition data for a region class";
    return check;
  }
  check.pass = *big > *small;
  check.detail = "mean LeRF transition " + fmt3(*big) + " over " + std::to_string(n_big) +
                 " large-region words vs " + fmt3(*small) + " over " +
                 std::to_string(n_small) + " quarter-size words";
  return check;
}

}  // namespace detail

inline VerifyReport run_verify(const std::filesystem::path& work_dir, std::uint64_t seed,
                               int workers, bool resume = false) {
  const auto started = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = verify_config(seed);
  const auto manifest =
      generate_synthetic_corpus(work_dir / "corpus", cfg.sample_rate, cfg.stft);
  Pipeline pipe(cfg, load_corpus(manifest), {work_dir / "run", workers, resume});
  pipe.run_all();

  const std::vector<EvalRecord> records = pipe.read_records();
  const SSBMReport ssbm = sweep_thresholds(records);

  VerifyReport report;
  report.checks.push_back(detail::check_importance_auc(pipe));
  report.checks.push_back(detail::check_ssbm_ordering(ssbm));
  report.checks.push_back(detail::check_curve_separation(records));
  report.checks.push_back(detail::check_region_size_trend(pipe));

  report.elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  VerifyCheck runtime;
  runtime.name = "runtime";
  runtime.pass = report.elapsed_s < kVerifyMaxSeconds;
  runtime.detail = detail::fmt3(report.elapsed_s) + " s (bound " +
                   detail::fmt3(kVerifyMaxSeconds) + " s)";
  report.checks.push_back(runtime);
  return report;
}

inline void print_verify_report(const VerifyReport& report, std::ostream& os) {
  for (const auto& check : report.checks) {
    os << (check.pass ? "[PASS] " : "[FAIL] ") << check.name << ": " << check.detail
       << '\n';
  }
  os << (report.all_pass() ? "verify: all checks passed\n"
                           : "verify: CHECKS FAILED\n");
}

}  // namespace specsal
