// tests/test_mix.cpp
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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "specsal/mix.hpp"

using Catch::Approx;
using namespace specsal;

namespace {

Waveform test_tone(int n, int rate) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    w.samples[std::size_t(i)] = 0.2 * std::sin(2.0 * M_PI * 440.0 * i / rate);
  }
  return w;
}

}  // namespace

TEST_CASE("white noise generator", "[mix]") {
  const Waveform a = white_noise(20000, 16000, 42);
  const Waveform b = white_noise(20000, 16000, 42);
  const Waveform c = white_noise(20000, 16000, 43);
  REQUIRE(a.samples == b.samples);
  REQUIRE(a.samples != c.samples);
  REQUIRE(a.sample_rate == 16000);
  REQUIRE(a.size() == 20000);
  double mean = 0.0;
  for (double s : a.samples) mean += s;
  mean /= double(a.size());
  REQUIRE(std::fabs(mean) < 0.02);
  REQUIRE(rms(a) == Approx(1.0).margin(0.02));
}

TEST_CASE("noise level through an all-ones gain", "[mix]") {
  const Waveform clean = test_tone(25600, 16000);
  StftConfig cfg;
  const Spectrogram spec = stft(clean, cfg);
  MatD gain(spec.bins.rows, spec.bins.cols);
  gain.fill(1.0);

  const Waveform out = render_noise_through_gain(clean, gain, cfg, 7, -25.0);
  REQUIRE(out.samples.size() == clean.samples.size());
  Waveform added = out;
  for (std::size_t i = 0; i < added.samples.size(); ++i) added.samples[i] -= clean.samples[i];
  const double level_db = 20.0 * std::log10(rms(added) / rms(clean));
  REQUIRE(level_db == Approx(-25.0).margin(0.5));
}

TEST_CASE("floor gain leaves the clean signal intact", "[mix]") {
  const Waveform clean = test_tone(12800, 16000);
  StftConfig cfg;
  const Spectrogram spec = stft(clean, cfg);
  MatD gain(spec.bins.rows, spec.bins.cols);
  gain.fill(1e-4);
  const Waveform out = render_noise_through_gain(clean, gain, cfg, 7, -25.0);
  REQUIRE(snr_db(clean, out) > 90.0);
}

TEST_CASE("render rejects bad inputs", "[mix]") {
  const Waveform clean = test_tone(12800, 16000);
  StftConfig cfg;
  SECTION("gain shape mismatch") {
    MatD gain(3, 3, 1.0);
    REQUIRE_THROWS_AS(render_noise_through_gain(clean, gain, cfg, 7, -25.0), DataError);
  }
  SECTION("silent clean input") {
    Waveform silent;
    silent.sample_rate = 16000;
    silent.samples.assign(12800, 0.0);
    MatD gain(1, 1, 1.0);
    REQUIRE_THROWS_AS(render_noise_through_gain(silent, gain, cfg, 7, -25.0), DataError);
  }
}
