// include/specsal/masks.hpp
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

// LeRF/MoRF noise masks. A mask value is a linear gain on the noise
// spectrogram: the ceiling (d1 dB) means full noise, the floor (d0 dB)
// means the noise is suppressed and the speech is left audible. Between
// the two the gain ramps linearly in dB.

#include <algorithm>
#include <cmath>
#include <string>

#include "specsal/dsp.hpp"
#include "specsal/importance.hpp"
#include "specsal/matrix.hpp"
#include "specsal/mix.hpp"

namespace specsal {

enum class MaskVariant { kLerf, kMorf };
enum class MaskMethod { kBubble, kEnergy };

inline std::string to_string(MaskVariant v) {
  return v == MaskVariant::kLerf ? "lerf" : "morf";
}
inline std::string to_string(MaskMethod m) {
  return m == MaskMethod::kBubble ? "bubble" : "energy";
}

struct MaskConfig {
  // p-value threshold (bubble) or absolute magnitude threshold (energy).
  // Callers working on a dB-relative energy grid multiply 10^(0.05*t_dB)
  // by their reference magnitude before building the config.
  double threshold = 0.0;
  double alpha = 0.5;
  double d0 = -80.0;
  double d1 = 0.0;
  MaskVariant variant = MaskVariant::kLerf;
  MaskMethod method = MaskMethod::kBubble;

  void validate() const {
    if (!(threshold > 0.0)) throw DataError("mask config: threshold must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("mask config: alpha must be in (0,1)");
    if (!(d0 < d1)) throw DataError("mask config: d0 must be < d1");
  }

  double floor_gain() const { return db_to_magnitude(d0); }
  double ceiling_gain() const { return db_to_magnitude(d1); }
  // dB midpoint of the transition; above it a point counts as noised.
  double mask_cut() const { return db_to_magnitude(0.5 * (d0 + d1)); }
};

struct NoiseMask {
  MatD values;
  MaskConfig config;
};

namespace detail {

inline double mask_gain_from_q(double q, const MaskConfig& cfg) {
  return db_to_magnitude(std::clamp(q, cfg.d0, cfg.d1));
}

// Ramp slope shared by all four masks: q crosses 0 at the threshold and
// reaches d0 - d1 over a band of width (1 - alpha) * threshold.
inline double bubble_q_lerf(double p, const MaskConfig& cfg) {
  return -(cfg.d1 - cfg.d0) * (p - cfg.threshold) /
         (cfg.threshold * cfg.alpha - cfg.threshold);
}

inline double energy_q_lerf(double a, const MaskConfig& cfg) {
  return (cfg.d1 - cfg.d0) * (a - cfg.threshold) /
         (cfg.alpha * cfg.threshold - cfg.threshold);
}

}  // namespace detail

inline double bubble_mask_value(double p, const MaskConfig& cfg) {
  const double q = detail::bubble_q_lerf(p, cfg);
  return detail::mask_gain_from_q(cfg.variant == MaskVariant::kLerf ? q : -q, cfg);
}

inline double energy_mask_value(double a, const MaskConfig& cfg) {
  const double q = detail::energy_q_lerf(a, cfg);
  return detail::mask_gain_from_q(cfg.variant == MaskVariant::kLerf ? q : -q, cfg);
}

namespace detail {

inline NoiseMask bubble_mask(const MatD& p_map, const MaskConfig& cfg) {
  cfg.validate();
  NoiseMask mask;
  mask.config = cfg;
  mask.values = MatD(p_map.rows, p_map.cols);
  for (std::size_t i = 0; i < p_map.data.size(); ++i) {
    mask.values.data[i] = bubble_mask_value(p_map.data[i], cfg);
  }
  return mask;
}

// Energy masks act inside the word's aligned frames. Outside them the
// rest of the sentence counts as least relevant: LeRF applies full noise
// there, MoRF leaves it clean.
inline NoiseMask energy_mask(const MatD& smoothed, const WordSpan& span,
                             const MaskConfig& cfg) {
  cfg.validate();
  span.validate(smoothed.cols);
  NoiseMask mask;
  mask.config = cfg;
  mask.values = MatD(smoothed.rows, smoothed.cols);
  const double outside =
      cfg.variant == MaskVariant::kLerf ? cfg.ceiling_gain() : cfg.floor_gain();
  mask.values.fill(outside);
  for (int f = 0; f < smoothed.rows; ++f) {
    for (int t = span.start_frame; t < span.end_frame; ++t) {
      mask.values(f, t) = energy_mask_value(smoothed(f, t), cfg);
    }
  }
  return mask;
}

}  // namespace detail

inline NoiseMask lerf_mask_bubble(const MatD& p_map, MaskConfig cfg) {
  cfg.variant = MaskVariant::kLerf;
  cfg.method = MaskMethod::kBubble;
  return detail::bubble_mask(p_map, cfg);
}

inline NoiseMask morf_mask_bubble(const MatD& p_map, MaskConfig cfg) {
  cfg.variant = MaskVariant::kMorf;
  cfg.method = MaskMethod::kBubble;
  return detail::bubble_mask(p_map, cfg);
}

inline NoiseMask lerf_mask_energy(const MatD& smoothed, const WordSpan& span,
                                  MaskConfig cfg) {
  cfg.variant = MaskVariant::kLerf;
  cfg.method = MaskMethod::kEnergy;
  return detail::energy_mask(smoothed, span, cfg);
}

inline NoiseMask morf_mask_energy(const MatD& smoothed, const WordSpan& span,
                                  MaskConfig cfg) {
  cfg.variant = MaskVariant::kMorf;
  cfg.method = MaskMethod::kEnergy;
  return detail::energy_mask(smoothed, span, cfg);
}

inline Waveform render_masked_mixture(const Waveform& clean, const NoiseMask& mask,
                                      std::uint64_t noise_seed, double noise_level_db,
                                      const StftConfig& stft_cfg) {
  return render_noise_through_gain(clean, mask.values, stft_cfg, noise_seed,
                                   noise_level_db);
}

}  // namespace specsal
