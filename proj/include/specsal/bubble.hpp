// include/specsal/bubble.hpp
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

// Bubble noise: white noise whose level is pushed down inside randomly
// placed oval holes on the time/mel plane. The audibility field records,
// per spectrogram point, how much of the maximum suppression was applied
// (0 = full noise, 1 = noise at the floor).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "specsal/dsp.hpp"
#include "specsal/matrix.hpp"
#include "specsal/mel.hpp"
#include "specsal/mix.hpp"
#include "specsal/rng.hpp"

namespace specsal {

struct BubbleFieldConfig {
  double bubbles_per_second = 10.0;  // Poisson rate
  double sigma_time_ms = 80.0;
  double sigma_mel = 120.0;
  double floor_db = -80.0;     // max suppression inside a bubble
  double global_snr_db = -25.0;  // full-strength noise level vs clean speech

  void validate() const {
    if (bubbles_per_second < 0.0) throw DataError("bubble config: rate must be >= 0");
    if (sigma_time_ms <= 0.0 || sigma_mel <= 0.0) {
      throw DataError("bubble config: sigmas must be > 0");
    }
    if (floor_db >= 0.0) throw DataError("bubble config: floor_db must be < 0");
  }
};

// Axes of a spectrogram on the time/mel plane.
struct SpecGrid {
  std::vector<double> frame_times_s;
  std::vector<double> bin_mels;

  static SpecGrid of(const Spectrogram& s) {
    SpecGrid g;
    g.frame_times_s = s.frame_axis();
    g.bin_mels.resize(std::size_t(s.num_bins()));
    for (int f = 0; f < s.num_bins(); ++f) g.bin_mels[std::size_t(f)] = hz_to_mel(s.freq_hz(f));
    return g;
  }

  int rows() const { return int(bin_mels.size()); }
  int cols() const { return int(frame_times_s.size()); }
  double mel_max() const { return bin_mels.empty() ? 0.0 : bin_mels.back(); }
};

struct Bubble {
  double time_s = 0.0;
  double mel = 0.0;
};

struct AudibilityMap {
  MatF values;  // F x T in [0, 1]
  std::uint64_t seed = 0;
};

inline std::vector<Bubble> sample_bubbles(Rng& rng, const BubbleFieldConfig& cfg,
                                          double duration_s, double mel_max) {
  cfg.validate();
  if (duration_s < 0.0) throw DataError("sample_bubbles: negative duration");
  const std::int64_t count = rng.poisson(cfg.bubbles_per_second * duration_s);
  std::vector<Bubble> out;
  out.reserve(std::size_t(count));
  for (std::int64_t i = 0; i < count; ++i) {
    Bubble b;
    b.time_s = rng.uniform(0.0, duration_s);
    b.mel = rng.uniform(0.0, mel_max);
    out.push_back(b);
  }
  return out;
}

// Sum of Gaussian ovals, clipped at 1. Each oval is separable in time and
// mel, so it is accumulated as an outer product of two profile vectors.
inline MatF bubble_audibility(const std::vector<Bubble>& bubbles,
                              const BubbleFieldConfig& cfg, const SpecGrid& grid) {
  cfg.validate();
  const int f_bins = grid.rows();
  const int t_frames = grid.cols();
  MatD acc(f_bins, t_frames);
  acc.fill(0.0);

  const double sig_t = cfg.sigma_time_ms / 1000.0;
  const double inv2t = 1.0 / (2.0 * sig_t * sig_t);
  const double inv2m = 1.0 / (2.0 * cfg.sigma_mel * cfg.sigma_mel);

  std::vector<double> tw(static_cast<std::size_t>(t_frames));
  std::vector<double> fw(static_cast<std::size_t>(f_bins));
  for (const Bubble& b : bubbles) {
    for (int t = 0; t < t_frames; ++t) {
      const double dt = grid.frame_times_s[std::size_t(t)] - b.time_s;
      tw[std::size_t(t)] = std::exp(-dt * dt * inv2t);
    }
    for (int f = 0; f < f_bins; ++f) {
      const double dm = grid.bin_mels[std::size_t(f)] - b.mel;
      fw[std::size_t(f)] = std::exp(-dm * dm * inv2m);
    }
    for (int f = 0; f < f_bins; ++f) {
      const double wf = fw[std::size_t(f)];
      if (wf < 1e-12) continue;
      double* row = &acc(f, 0);
      for (int t = 0; t < t_frames; ++t) row[t] += wf * tw[std::size_t(t)];
    }
  }

  MatF out(f_bins, t_frames);
  for (std::size_t i = 0; i < acc.data.size(); ++i) {
    out.data[i] = float(std::min(1.0, acc.data[i]));
  }
  return out;
}

inline AudibilityMap generate_bubble_field(std::uint64_t seed, const BubbleFieldConfig& cfg,
                                           const SpecGrid& grid, double duration_s) {
  Rng rng(seed);
  const auto bubbles = sample_bubbles(rng, cfg, duration_s, grid.mel_max());
  AudibilityMap map;
  map.seed = seed;
  map.values = bubble_audibility(bubbles, cfg, grid);
  return map;
}

// Noise gain implied by an audibility field: full noise where audibility is
// 0, floor_db of suppression where it is 1.
inline MatD bubble_noise_gain(const AudibilityMap& field, const BubbleFieldConfig& cfg) {
  MatD gain(field.values.rows, field.values.cols);
  for (std::size_t i = 0; i < gain.data.size(); ++i) {
    gain.data[i] = db_to_magnitude(cfg.floor_db * double(field.values.data[i]));
  }
  return gain;
}

inline Waveform render_bubble_mixture(const Waveform& clean, const AudibilityMap& field,
                                      const BubbleFieldConfig& cfg,
                                      const StftConfig& stft_cfg) {
  cfg.validate();
  const MatD gain = bubble_noise_gain(field, cfg);
  const std::uint64_t noise_seed = derive_seed(field.seed, "bubble-noise");
  return render_noise_through_gain(clean, gain, stft_cfg, noise_seed, cfg.global_snr_db);
}

}  // namespace specsal
