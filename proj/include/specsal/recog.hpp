// include/specsal/recog.hpp
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

// The recognizer boundary: per-word correctness scoring, a deterministic
// oracle recognizer driven by planted ground-truth regions, and the batch
// protocol for driving an external recognizer command.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "specsal/common.hpp"
#include "specsal/matrix.hpp"

namespace specsal {

using WordScore = std::vector<std::uint8_t>;

inline std::string normalize_text(const std::string& text, bool enabled = true) {
  if (!enabled) return text;
  std::string out;
  out.reserve(text.size());
  for (unsigned char c : text) {
    if (std::ispunct(c)) continue;
    out.push_back(char(std::tolower(c)));
  }
  return out;
}

inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

// Minimum-edit-distance alignment; reference word k scores 1 iff it aligns
// to an identical hypothesis word. Ties between optimal alignments are
// broken preferring matches, then substitutions, then deletions, walking
// from the front so earlier positions win.
inline WordScore score_words(const std::vector<std::string>& reference,
                             const std::vector<std::string>& hypothesis) {
  if (reference.empty()) throw DataError("score_words: empty reference");
  const std::size_t nr = reference.size();
  const std::size_t nh = hypothesis.size();

  // cost[i][j] = edit distance between reference[i:] and hypothesis[j:].
  std::vector<std::vector<int>> cost(nr + 1, std::vector<int>(nh + 1, 0));
  for (std::size_t i = 0; i <= nr; ++i) cost[i][nh] = int(nr - i);
  for (std::size_t j = 0; j <= nh; ++j) cost[nr][j] = int(nh - j);
  for (std::size_t i = nr; i-- > 0;) {
    for (std::size_t j = nh; j-- > 0;) {
      const int sub = cost[i + 1][j + 1] + (reference[i] == hypothesis[j] ? 0 : 1);
      const int del = cost[i + 1][j] + 1;
      const int ins = cost[i][j + 1] + 1;
      cost[i][j] = std::min({sub, del, ins});
    }
  }

  WordScore score(nr, 0);
  std::size_t i = 0, j = 0;
  while (i < nr) {
    if (j >= nh) {
      ++i;  // forced deletion
      continue;
    }
    const bool eq = reference[i] == hypothesis[j];
    const int here = cost[i][j];
    if (eq && here == cost[i + 1][j + 1]) {
      score[i] = 1;
      ++i, ++j;
    } else if (!eq && here == cost[i + 1][j + 1] + 1) {
      ++i, ++j;  // substitution
    } else if (here == cost[i + 1][j] + 1) {
      ++i;  // deletion
    } else {
      ++j;  // insertion
    }
  }
  return score;
}

inline WordScore score_transcripts(const std::string& reference,
                                   const std::string& hypothesis,
                                   bool normalize = true) {
  return score_words(tokenize(normalize_text(reference, normalize)),
                     tokenize(normalize_text(hypothesis, normalize)));
}

// Deterministic stand-in recognizer: each word has a planted ground-truth
// region; the word is heard iff enough of the region's clean energy is left
// unnoised.
struct OracleConfig {
  std::vector<MatB> planted;      // one F x T region per reference word
  double reveal_threshold = 0.6;  // required revealed energy fraction
  double mask_cut = 0.01;         // noise gain at/above which a point is noised

  void validate(int f_bins, int t_frames) const {
    if (!(reveal_threshold > 0.0 && reveal_threshold < 1.0)) {
      throw DataError("oracle config: reveal_threshold must be in (0,1)");
    }
    if (!(mask_cut > 0.0)) throw DataError("oracle config: mask_cut must be > 0");
    if (planted.empty()) throw DataError("oracle config: no planted regions");
    for (std::size_t k = 0; k < planted.size(); ++k) {
      const auto& m = planted[k];
      if (m.rows != f_bins || m.cols != t_frames) {
        throw DataError("oracle config: planted region " + std::to_string(k) +
                        " shape mismatch");
      }
      bool any = false;
      for (auto v : m.data) any |= (v != 0);
      if (!any) {
        throw DataError("oracle config: planted region " + std::to_string(k) +
                        " is empty");
      }
    }
  }
};

namespace detail {

template <typename Unnoised>
WordScore oracle_score_impl(const MatD& clean_power, const OracleConfig& oracle,
                            Unnoised&& unnoised) {
  oracle.validate(clean_power.rows, clean_power.cols);
  WordScore score(oracle.planted.size(), 0);
  for (std::size_t k = 0; k < oracle.planted.size(); ++k) {
    const auto& region = oracle.planted[k];
    double total = 0.0, revealed = 0.0;
    for (std::size_t i = 0; i < region.data.size(); ++i) {
      if (!region.data[i]) continue;
      total += clean_power.data[i];
      if (unnoised(i)) revealed += clean_power.data[i];
    }
    if (total <= 0.0) {
      throw DataError("oracle: planted region " + std::to_string(k) +
                      " has no clean energy");
    }
    score[k] = (revealed / total >= oracle.reveal_threshold) ? 1 : 0;
  }
  return score;
}

}  // namespace detail

// Scoring against a noise mask: a point is audible while its noise gain
// stays below mask_cut.
inline WordScore oracle_score_mask(const MatD& mask_values, const MatD& clean_power,
                                   const OracleConfig& oracle) {
  require_same_shape(mask_values, clean_power, "oracle mask/power");
  return detail::oracle_score_impl(clean_power, oracle, [&](std::size_t i) {
    return mask_values.data[i] < oracle.mask_cut;
  });
}

// Scoring against a bubble audibility field: a point is audible while more
// than half of the maximum suppression is applied to the noise.
inline WordScore oracle_score_audibility(const MatF& audibility, const MatD& clean_power,
                                         const OracleConfig& oracle) {
  if (audibility.rows != clean_power.rows || audibility.cols != clean_power.cols) {
    throw DataError("oracle: audibility/power shape mismatch");
  }
  return detail::oracle_score_impl(clean_power, oracle, [&](std::size_t i) {
    return audibility.data[i] > 0.5f;
  });
}

struct HypothesisRecord {
  std::string mixture_id;
  std::string hypothesis;
};

struct ExternalAdapterConfig {
  // Command template; "{job}" and "{out}" are replaced by the job-file and
  // output-file paths.
  std::string command;
  bool serial = false;  // recognizer not safe to invoke in parallel
};

struct JobEntry {
  std::string mixture_id;
  std::string wav_path;
};

namespace detail {

inline std::string substitute_placeholder(std::string text, const std::string& key,
                                          const std::string& value) {
  const std::string token = "{" + key + "}";
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace detail

// Writes the job file, invokes the external recognizer once for the batch,
// and parses "mixture_id<TAB>hypothesis" lines from its output file.
inline std::vector<HypothesisRecord> run_external_batch(
    const std::vector<JobEntry>& jobs, const ExternalAdapterConfig& adapter,
    const std::filesystem::path& scratch_dir) {
  if (adapter.command.empty()) throw DataError("external adapter: empty command");
  std::filesystem::create_directories(scratch_dir);
  const auto job_path = scratch_dir / "batch.jobs";
  const auto out_path = scratch_dir / "batch.hyp";
  {
    std::ofstream job_file(job_path);
    if (!job_file) throw DataError("cannot write job file " + job_path.string());
    for (const auto& j : jobs) job_file << j.mixture_id << '\t' << j.wav_path << '\n';
  }
  std::error_code ec;
  std::filesystem::remove(out_path, ec);

  std::string cmd = detail::substitute_placeholder(adapter.command, "job", job_path.string());
  cmd = detail::substitute_placeholder(cmd, "out", out_path.string());
  const int rc = std::system(cmd.c_str());
  if (rc != 0) {
    throw ExternalToolError("recognizer command failed (exit status " +
                            std::to_string(rc) + "): " + cmd);
  }

  std::ifstream out_file(out_path);
  if (!out_file) {
    throw ExternalToolError("recognizer produced no output file " + out_path.string());
  }
  std::map<std::string, std::string> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(out_file, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ExternalToolError("malformed recognizer output line " +
                              std::to_string(line_no) + ": '" + line + "'");
    }
    by_id[line.substr(0, tab)] = line.substr(tab + 1);
  }

  std::vector<HypothesisRecord> records;
  records.reserve(jobs.size());
  for (const auto& j : jobs) {
    auto it = by_id.find(j.mixture_id);
    if (it == by_id.end()) {
      logging::warn("recognizer returned no hypothesis for mixture '" + j.mixture_id +
                    "'; scoring it as empty");
      records.push_back({j.mixture_id, ""});
    } else {
      records.push_back({j.mixture_id, it->second});
    }
  }
  return records;
}

}  // namespace specsal
