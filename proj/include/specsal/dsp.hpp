// include/specsal/dsp.hpp
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

// Waveform <-> spectrogram transforms and dB conversions shared by the whole
// toolkit. The STFT uses weighted overlap-add with an explicitly accumulated
// window-square denominator, so any window/hop pair that satisfies the
// nonzero-overlap condition reconstructs to machine precision.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "specsal/common.hpp"
#include "specsal/fft.hpp"
#include "specsal/matrix.hpp"

namespace specsal {

struct Waveform {
  std::vector<double> samples;  // nominal range [-1, 1]
  double sample_rate = 16000.0;

  std::int64_t size() const { return std::int64_t(samples.size()); }
  double duration_s() const { return double(samples.size()) / sample_rate; }
};

inline double rms(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : w.samples) acc += s * s;
  return std::sqrt(acc / double(w.samples.size()));
}

// out[n] = w[n] - coeff*w[n-1], out[0] = w[0].
inline Waveform pre_emphasis(const Waveform& w, double coeff) {
  if (!(coeff >= 0.0 && coeff < 1.0)) {
    throw DataError("pre_emphasis: coeff must be in [0, 1)");
  }
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(w.samples.size());
  for (std::size_t n = 0; n < w.samples.size(); ++n) {
    out.samples[n] = (n == 0) ? w.samples[0] : w.samples[n] - coeff * w.samples[n - 1];
  }
  return out;
}

struct StftConfig {
  double window_ms = 64.0;
  double hop_ms = 16.0;
  std::string window_kind = "sqrt_hann";
  // Pad both ends by half a window so every input sample sits under full
  // analysis frames; frame j is then centered at time j*hop.
  bool center = true;

  int window_samples(double sample_rate) const {
    return int(std::lround(window_ms * sample_rate / 1000.0));
  }
  int hop_samples(double sample_rate) const {
    return int(std::lround(hop_ms * sample_rate / 1000.0));
  }

  void validate(double sample_rate) const {
    if (!(sample_rate > 0)) throw DataError("StftConfig: sample_rate must be > 0");
    if (window_samples(sample_rate) < 1) throw DataError("StftConfig: window too short");
    if (hop_samples(sample_rate) < 1) throw DataError("StftConfig: hop too short");
    if (hop_ms > window_ms) throw DataError("StftConfig: hop_ms must be <= window_ms");
  }
};

// Periodic (DFT-even) windows.
inline std::vector<double> make_window(const std::string& kind, int n) {
  std::vector<double> w(n, 1.0);
  if (kind == "rect") return w;
  for (int k = 0; k < n; ++k) {
    const double c = std::cos(2.0 * M_PI * double(k) / double(n));
    if (kind == "hann") {
      w[k] = 0.5 - 0.5 * c;
    } else if (kind == "sqrt_hann") {
      w[k] = std::sqrt(std::max(0.0, 0.5 - 0.5 * c));
    } else if (kind == "hamming") {
      w[k] = 0.54 - 0.46 * c;
    } else {
      throw DataError("unknown window kind: " + kind);
    }
  }
  return w;
}

struct Spectrogram {
  MatC bins;  // F x T, F = window_samples/2 + 1
  double sample_rate = 16000.0;
  StftConfig config;
  std::int64_t n_samples = 0;  // length of the analyzed waveform

  int num_bins() const { return bins.rows; }
  int num_frames() const { return bins.cols; }

  double freq_hz(int bin) const {
    return double(bin) * sample_rate / double(config.window_samples(sample_rate));
  }
  double frame_time_s(int frame) const {
    const double hop = double(config.hop_samples(sample_rate));
    const double offset = config.center ? 0.0 : double(config.window_samples(sample_rate)) / 2.0;
    return (double(frame) * hop + offset) / sample_rate;
  }
  std::vector<double> freq_axis() const {
    std::vector<double> f(num_bins());
    for (int i = 0; i < num_bins(); ++i) f[i] = freq_hz(i);
    return f;
  }
  std::vector<double> frame_axis() const {
    std::vector<double> t(num_frames());
    for (int j = 0; j < num_frames(); ++j) t[j] = frame_time_s(j);
    return t;
  }
};

inline MatD magnitude(const Spectrogram& s) {
  MatD out(s.bins.rows, s.bins.cols);
  for (std::size_t i = 0; i < s.bins.size(); ++i) out.data[i] = std::abs(s.bins.data[i]);
  return out;
}

inline MatD power(const Spectrogram& s) {
  MatD out(s.bins.rows, s.bins.cols);
  for (std::size_t i = 0; i < s.bins.size(); ++i) out.data[i] = std::norm(s.bins.data[i]);
  return out;
}

inline Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate(w.sample_rate);
  const std::int64_t n = w.size();
  if (n == 0) throw DataError("stft: empty waveform");
  const int win = cfg.window_samples(w.sample_rate);
  const int hop = cfg.hop_samples(w.sample_rate);
  const int pad = cfg.center ? win / 2 : 0;

  std::int64_t padded = n + 2 * std::int64_t(pad);
  if (padded < win) throw DataError("stft: window longer than padded signal");
  // Extend the tail so the frame grid tiles the padded signal exactly.
  std::int64_t t_frames = (padded - win) / hop + 1;
  if ((padded - win) % hop != 0) {
    ++t_frames;
    padded = win + (t_frames - 1) * std::int64_t(hop);
  }

  std::vector<double> x(std::size_t(padded), 0.0);
  std::copy(w.samples.begin(), w.samples.end(), x.begin() + pad);

  const std::vector<double> window = make_window(cfg.window_kind, win);
  const int f_bins = win / 2 + 1;

  Spectrogram out;
  out.bins = MatC(f_bins, int(t_frames));
  out.sample_rate = w.sample_rate;
  out.config = cfg;
  out.n_samples = n;

  std::vector<detail::cplx> buf(std::size_t(win), detail::cplx{});
  for (std::int64_t t = 0; t < t_frames; ++t) {
    const std::int64_t start = t * hop;
    for (int k = 0; k < win; ++k) {
      buf[std::size_t(k)] = x[std::size_t(start + k)] * window[std::size_t(k)];
    }
    detail::fft(buf, false);
    for (int f = 0; f < f_bins; ++f) out.bins(f, int(t)) = buf[std::size_t(f)];
  }
  return out;
}

// Weighted overlap-add synthesis with the analysis window reused as the
// synthesis window. Throws if the window/hop pair leaves any covered sample
// without overlap weight.
inline Waveform istft(const Spectrogram& s) {
  s.config.validate(s.sample_rate);
  const int win = s.config.window_samples(s.sample_rate);
  const int hop = s.config.hop_samples(s.sample_rate);
  const int pad = s.config.center ? win / 2 : 0;
  const int f_bins = win / 2 + 1;
  if (s.bins.rows != f_bins) {
    throw DataError("istft: spectrogram has " + std::to_string(s.bins.rows) +
                    " bins but the config implies " + std::to_string(f_bins));
  }
  if (s.n_samples <= 0) throw DataError("istft: spectrogram has no sample count");

  const std::int64_t t_frames = s.bins.cols;
  const std::int64_t padded = std::int64_t(win) + (t_frames - 1) * std::int64_t(hop);
  const std::vector<double> window = make_window(s.config.window_kind, win);

  std::vector<double> acc(std::size_t(padded), 0.0);
  std::vector<double> wsum(std::size_t(padded), 0.0);
  std::vector<detail::cplx> buf(std::size_t(win), detail::cplx{});

  for (std::int64_t t = 0; t < t_frames; ++t) {
    for (int f = 0; f < f_bins; ++f) buf[std::size_t(f)] = s.bins(f, int(t));
    // Hermitian completion of the upper half of the spectrum.
    for (int f = f_bins; f < win; ++f) {
      buf[std::size_t(f)] = std::conj(s.bins(win - f, int(t)));
    }
    detail::fft(buf, true);
    const std::int64_t start = t * hop;
    for (int k = 0; k < win; ++k) {
      acc[std::size_t(start + k)] += buf[std::size_t(k)].real() * window[std::size_t(k)];
      wsum[std::size_t(start + k)] += window[std::size_t(k)] * window[std::size_t(k)];
    }
  }

  Waveform out;
  out.sample_rate = s.sample_rate;
  out.samples.resize(std::size_t(s.n_samples));
  for (std::int64_t i = 0; i < s.n_samples; ++i) {
    const double d = wsum[std::size_t(i + pad)];
    if (d < 1e-10) {
      throw DataError("istft: window/hop pair does not satisfy overlap-add (zero "
                      "weight at sample " + std::to_string(i) + ")");
    }
    out.samples[std::size_t(i)] = acc[std::size_t(i + pad)] / d;
  }
  return out;
}

inline constexpr double kDbFloor = -300.0;  // keeps log arithmetic finite at zero

inline double magnitude_to_db(double a) {
  if (!(a > 0.0)) return kDbFloor;
  return std::max(20.0 * std::log10(a), kDbFloor);
}

inline double db_to_magnitude(double x_db) { return std::pow(10.0, 0.05 * x_db); }

// Reconstruction quality in dB of `approx` against `reference`.
inline double snr_db(const Waveform& reference, const Waveform& approx) {
  if (reference.samples.size() != approx.samples.size()) {
    throw DataError("snr_db: length mismatch");
  }
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < reference.samples.size(); ++i) {
    const double e = reference.samples[i] - approx.samples[i];
    sig += reference.samples[i] * reference.samples[i];
    err += e * e;
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  if (sig == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

}  // namespace specsal
