// include/specsal/mix.hpp
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

// Noise generation and the shared "shape white noise in the spectrogram
// domain, add to clean speech" rendering step.

#include <cstdint>
#include <string>
#include <vector>

#include "specsal/dsp.hpp"
#include "specsal/matrix.hpp"
#include "specsal/rng.hpp"

namespace specsal {

inline Waveform white_noise(std::int64_t n_samples, int sample_rate, std::uint64_t seed) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(std::size_t(n_samples));
  for (auto& s : w.samples) s = rng.gaussian();
  return w;
}

// Renders clean + istft(gain .* stft(noise)), with the raw noise scaled so
// that its full-strength level sits at `noise_level_db` relative to the
// clean signal's RMS. `gain` is a linear per-point multiplier on the noise
// spectrogram (1 = full noise, 10^(-80/20) = floor).
inline Waveform render_noise_through_gain(const Waveform& clean, const MatD& gain,
                                          const StftConfig& stft_cfg,
                                          std::uint64_t noise_seed,
                                          double noise_level_db) {
  const double clean_rms = rms(clean);
  if (clean_rms <= 0.0) throw DataError("render_noise_through_gain: silent clean input");

  Waveform noise = white_noise(std::int64_t(clean.samples.size()), clean.sample_rate,
                               noise_seed);
  const double target_rms = clean_rms * db_to_magnitude(noise_level_db);
  const double scale = target_rms / rms(noise);
  for (auto& s : noise.samples) s *= scale;

  Spectrogram spec = stft(noise, stft_cfg);
  if (spec.bins.rows != gain.rows || spec.bins.cols != gain.cols) {
    throw DataError("render_noise_through_gain: gain is " + std::to_string(gain.rows) +
                    "x" + std::to_string(gain.cols) + " but the noise spectrogram is " +
                    std::to_string(spec.bins.rows) + "x" + std::to_string(spec.bins.cols));
  }
  for (int f = 0; f < spec.bins.rows; ++f) {
    for (int t = 0; t < spec.bins.cols; ++t) spec.bins(f, t) *= gain(f, t);
  }
  Waveform shaped = istft(spec);

  Waveform out = clean;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] += shaped.samples[i];
  }
  return out;
}

}  // namespace specsal
