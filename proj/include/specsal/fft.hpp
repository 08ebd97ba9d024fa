// include/specsal/fft.hpp
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

// Self-contained complex DFT: iterative radix-2 for power-of-two sizes,
// Bluestein's chirp-z transform for everything else. Double precision
// throughout; no external FFT dependency and no shared plan state, so calls
// are safe from any number of threads.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "specsal/common.hpp"

namespace specsal::detail {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / double(len);
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      const cplx w = std::polar(1.0, ang * double(k));
      for (std::size_t i = k; i < n; i += len) {
        const cplx u = a[i];
        const cplx v = a[i + half] * w;
        a[i] = u + v;
        a[i + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double s = 1.0 / double(n);
    for (auto& v : a) v *= s;
  }
}

// Chirp factors exp(-i*pi*k^2/n). k^2 is reduced mod 2n in exact integer
// arithmetic before the angle is formed, which keeps the phase accurate for
// large k.
inline cplx chirp(std::uint64_t k, std::uint64_t n) {
  const std::uint64_t r = (k * k) % (2 * n);
  return std::polar(1.0, -M_PI * double(r) / double(n));
}

inline void fft_bluestein(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (inverse) {
    for (auto& v : a) v = std::conj(v);
  }
  const std::size_t m = next_pow2(2 * n - 1);
  std::vector<cplx> fa(m), fb(m);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx w = chirp(k, n);
    fa[k] = a[k] * w;
    fb[k] = std::conj(w);
    if (k > 0) fb[m - k] = std::conj(w);
  }
  fft_pow2(fa, false);
  fft_pow2(fb, false);
  for (std::size_t k = 0; k < m; ++k) fa[k] *= fb[k];
  fft_pow2(fa, true);
  for (std::size_t k = 0; k < n; ++k) a[k] = fa[k] * chirp(k, n);
  if (inverse) {
    const double s = 1.0 / double(n);
    for (auto& v : a) v = std::conj(v) * s;
  }
}

// In-place DFT of arbitrary length. inverse=true applies the 1/n scale.
inline void fft(std::vector<cplx>& a, bool inverse) {
  if (a.empty()) return;
  if (is_pow2(a.size())) {
    fft_pow2(a, inverse);
  } else {
    fft_bluestein(a, inverse);
  }
}

}  // namespace specsal::detail
