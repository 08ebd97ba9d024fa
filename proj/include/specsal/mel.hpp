// include/specsal/mel.hpp
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

// Mel filterbank with a non-negative back-projection. mel_smooth() runs a
// magnitude spectrogram down to n_mels bands and back up, which is the
// spectral smoothing used by the energy-based importance baseline.

#include <algorithm>
#include <cmath>
#include <vector>

#include "specsal/common.hpp"
#include "specsal/matrix.hpp"

namespace specsal {

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

struct MelFilterbank {
  int n_mels = 30;
  MatD weights;          // n_mels x F, triangular filters on the mel axis
  MatD back_projection;  // F x n_mels, non-negative, flat-spectrum preserving

  // freqs: Hz of each spectrogram row; sample_rate fixes the Nyquist edge.
  static MelFilterbank make(int n_mels, const std::vector<double>& freqs,
                            double sample_rate) {
    if (n_mels < 1) throw DataError("MelFilterbank: n_mels must be >= 1");
    if (freqs.empty()) throw DataError("MelFilterbank: empty frequency axis");
    const int f_bins = int(freqs.size());
    const double mel_max = hz_to_mel(sample_rate / 2.0);

    // n_mels + 2 equally spaced mel points; filter m peaks at point m+1.
    std::vector<double> pts(std::size_t(n_mels) + 2);
    for (int i = 0; i < n_mels + 2; ++i) {
      pts[std::size_t(i)] = mel_max * double(i) / double(n_mels + 1);
    }

    MelFilterbank fb;
    fb.n_mels = n_mels;
    fb.weights = MatD(n_mels, f_bins);
    for (int i = 0; i < f_bins; ++i) {
      // Bins below the first peak or above the last are clamped onto the edge
      // filters so every bin in [0, Nyquist] keeps nonzero total weight.
      const double mel = std::clamp(hz_to_mel(freqs[std::size_t(i)]), pts[1],
                                    pts[std::size_t(n_mels)]);
      for (int m = 0; m < n_mels; ++m) {
        const double lo = pts[std::size_t(m)];
        const double peak = pts[std::size_t(m) + 1];
        const double hi = pts[std::size_t(m) + 2];
        double tri = 0.0;
        if (mel >= lo && mel <= hi) {
          tri = (mel <= peak) ? (mel - lo) / (peak - lo) : (hi - mel) / (hi - peak);
        }
        fb.weights(m, i) = std::max(0.0, tri);
      }
    }

    // Row sums of W; each filter must cover at least one bin.
    std::vector<double> filter_mass(std::size_t(n_mels), 0.0);
    for (int m = 0; m < n_mels; ++m) {
      for (int i = 0; i < f_bins; ++i) filter_mass[std::size_t(m)] += fb.weights(m, i);
      if (filter_mass[std::size_t(m)] <= 0.0) {
        throw DataError("MelFilterbank: filter " + std::to_string(m) +
                        " covers no frequency bin; use fewer mels or more bins");
      }
    }

    // back_projection = D * W^T with D chosen so that a flat spectrum survives
    // the round trip with unit gain: (B W 1)_f = 1 exactly.
    fb.back_projection = MatD(f_bins, n_mels);
    for (int i = 0; i < f_bins; ++i) {
      double denom = 0.0;
      for (int m = 0; m < n_mels; ++m) denom += fb.weights(m, i) * filter_mass[std::size_t(m)];
      if (denom <= 0.0) {
        throw DataError("MelFilterbank: bin " + std::to_string(i) + " has zero weight");
      }
      for (int m = 0; m < n_mels; ++m) {
        fb.back_projection(i, m) = fb.weights(m, i) / denom;
      }
    }
    return fb;
  }
};

// out = back_projection * (weights * mag). Non-negative in, non-negative out;
// per column the result has rank at most n_mels.
inline MatD mel_smooth(const MatD& mag, const MelFilterbank& fb) {
  if (mag.rows != fb.weights.cols) {
    throw DataError("mel_smooth: magnitude has " + std::to_string(mag.rows) +
                    " rows but the filterbank expects " + std::to_string(fb.weights.cols));
  }
  const int f_bins = mag.rows, frames = mag.cols, n_mels = fb.n_mels;
  MatD bands(n_mels, frames, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    for (int i = 0; i < f_bins; ++i) {
      const double w = fb.weights(m, i);
      if (w == 0.0) continue;
      const double* src = mag.row(i);
      double* dst = bands.row(m);
      for (int t = 0; t < frames; ++t) dst[t] += w * src[t];
    }
  }
  MatD out(f_bins, frames, 0.0);
  for (int i = 0; i < f_bins; ++i) {
    for (int m = 0; m < n_mels; ++m) {
      const double b = fb.back_projection(i, m);
      if (b == 0.0) continue;
      const double* src = bands.row(m);
      double* dst = out.row(i);
      for (int t = 0; t < frames; ++t) dst[t] += b * src[t];
    }
  }
  return out;
}

}  // namespace specsal
