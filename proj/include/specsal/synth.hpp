// include/specsal/synth.hpp
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

// Synthetic "speech": tone-complex words with known importance regions, so
// the whole pipeline can be verified against planted ground truth without
// external data. Each utterance holds three words whose discriminative
// tones sit inside a planted rectangle on the spectrogram; word regions
// alternate between a large rectangle and one a quarter of its area. A loud
// band-limited distractor tone runs through the entire utterance outside
// every planted region, so the strongest energy in the utterance is not the
// important energy.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "specsal/dsp.hpp"
#include "specsal/io.hpp"
#include "specsal/matrix.hpp"

namespace specsal {

using Json = nlohmann::json;

struct SynthWord {
  std::string text;
  bool big = true;
  int start_frame = 0;  // span on the hop grid, half-open
  int end_frame = 0;
  int band_lo = 0;  // planted frequency band for the big variant, half-open
  int band_hi = 0;

  // The small variant keeps the central quarter of the rectangle: half the
  // frames by half the bins.
  int region_start_frame() const { return big ? start_frame : start_frame + 6; }
  int region_end_frame() const { return big ? end_frame : end_frame - 6; }
  int region_band_lo() const { return big ? band_lo : band_lo + (band_hi - band_lo) / 4; }
  int region_band_hi() const { return big ? band_hi : band_hi - (band_hi - band_lo) / 4; }
};

struct SynthUtterance {
  std::string id;
  std::vector<SynthWord> words;
};

inline constexpr int kSynthFrames = 101;        // 1.6 s at 64 ms / 16 ms STFT
inline constexpr int kSynthSamples = 25600;     // 1.6 s at 16 kHz
inline constexpr int kSynthDistractorBin = 30;  // ~469 Hz, outside every band
inline constexpr double kSynthToneAmp = 0.1;
inline constexpr double kSynthDistractorAmp = 0.25;

inline SynthUtterance synth_utterance_layout(int utterance_index) {
  // Band heights grow with frequency so each band covers a comparable mel
  // extent; equal bin heights would leave the upper bands perceptually tiny.
  static constexpr int kBandLo[3] = {60, 130, 228};
  static constexpr int kBandHi[3] = {120, 218, 388};
  static constexpr int kSpanStart[3] = {10, 40, 70};
  SynthUtterance utt;
  char id[16];
  std::snprintf(id, sizeof id, "utt%02d", utterance_index);
  utt.id = id;
  for (int k = 0; k < 3; ++k) {
    SynthWord w;
    w.big = ((utterance_index + k) % 2) == 0;
    w.start_frame = kSpanStart[k];
    w.end_frame = kSpanStart[k] + 24;
    w.band_lo = kBandLo[k];
    w.band_hi = kBandHi[k];
    char text[24];
    std::snprintf(text, sizeof text, "%s%02d%d", w.big ? "big" : "sm", utterance_index, k);
    w.text = text;
    utt.words.push_back(w);
  }
  return utt;
}

// Discriminative tone bins for a word, all inside its planted region.  Large
// regions carry tones flush across the band so every in-region point sits
// near real energy; gaps at the band edges would score at chance.
inline std::vector<int> synth_carrier_bins(const SynthWord& w) {
  const int h = w.band_hi - w.band_lo;
  std::vector<int> bins;
  if (w.big) {
    for (int k = 0; k < 8; ++k) {
      bins.push_back(w.band_lo + 2 + (k * (h - 5) + 3) / 7);
    }
  } else {
    for (int k = 3; k <= 5; ++k) bins.push_back(w.band_lo + k * h / 8);
  }
  return bins;
}

namespace detail {

// Adds a tone at an exact STFT bin center over [start, end) samples with
// raised-cosine edges.
inline void add_tone(Waveform& w, int bin, int window_samples, double amp,
                     std::int64_t start, std::int64_t end) {
  const double freq = double(bin) * w.sample_rate / window_samples;
  const std::int64_t ramp = w.sample_rate * 32 / 1000;  // 32 ms
  for (std::int64_t n = start; n < end; ++n) {
    double env = 1.0;
    if (n - start < ramp) {
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * double(n - start) / ramp);
    } else if (end - n <= ramp) {
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * double(end - n) / ramp);
    }
    w.samples[std::size_t(n)] +=
        amp * env * std::sin(2.0 * std::numbers::pi * freq * double(n) / w.sample_rate);
  }
}

}  // namespace detail

inline Waveform synth_utterance_wave(const SynthUtterance& utt, int sample_rate,
                                     const StftConfig& stft_cfg) {
  const int win = stft_cfg.window_samples(sample_rate);
  const int hop = stft_cfg.hop_samples(sample_rate);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(kSynthSamples, 0.0);
  for (const SynthWord& word : utt.words) {
    // Tones run two hops past the region on both sides so that the analysis
    // window sees full amplitude at the region's edge frames.
    const std::int64_t start =
        std::max<std::int64_t>(0, (std::int64_t(word.region_start_frame()) - 2) * hop);
    const std::int64_t end = std::min<std::int64_t>(
        kSynthSamples, (std::int64_t(word.region_end_frame()) + 2) * hop);
    for (int bin : synth_carrier_bins(word)) {
      detail::add_tone(w, bin, win, kSynthToneAmp, start, end);
    }
  }
  detail::add_tone(w, kSynthDistractorBin, win, kSynthDistractorAmp, 0, kSynthSamples);
  return w;
}

inline MatB synth_planted_region(const SynthWord& w, int f_bins, int t_frames) {
  MatB region(f_bins, t_frames);
  region.fill(0);
  for (int f = w.region_band_lo(); f < w.region_band_hi(); ++f) {
    for (int t = w.region_start_frame(); t < w.region_end_frame(); ++t) {
      region(f, t) = 1;
    }
  }
  return region;
}

// Writes wav/, planted/, corpus.ctm, lexicon.txt and manifest.json under
// `dir`. Fully deterministic; the returned path is the manifest.
inline std::filesystem::path generate_synthetic_corpus(const std::filesystem::path& dir,
                                                       int sample_rate,
                                                       const StftConfig& stft_cfg,
                                                       int n_utterances = 10) {
  namespace fs = std::filesystem;
  if (n_utterances < 1) throw DataError("synthetic corpus: need at least one utterance");
  stft_cfg.validate(sample_rate);
  const int win = stft_cfg.window_samples(sample_rate);
  const int hop = stft_cfg.hop_samples(sample_rate);
  const int f_bins = win / 2 + 1;
  const double hop_s = double(hop) / sample_rate;
  const std::uint64_t stamp = fnv1a64("synthetic-corpus-v1");

  fs::create_directories(dir / "wav");
  fs::create_directories(dir / "planted");

  Json manifest;
  manifest["corpus"] = "synthetic-v1";
  manifest["sample_rate"] = sample_rate;
  manifest["ctm"] = "corpus.ctm";
  manifest["lexicon"] = "lexicon.txt";
  manifest["utterances"] = Json::array();

  std::ofstream ctm(dir / "corpus.ctm");
  std::ofstream lexicon(dir / "lexicon.txt");
  if (!ctm || !lexicon) throw DataError("cannot write corpus files in " + dir.string());

  for (int u = 0; u < n_utterances; ++u) {
    const SynthUtterance utt = synth_utterance_layout(u);
    const Waveform wave = synth_utterance_wave(utt, sample_rate, stft_cfg);
    write_wav_pcm16(dir / "wav" / (utt.id + ".wav"), wave);

    Json entry;
    entry["id"] = utt.id;
    entry["wav"] = "wav/" + utt.id + ".wav";
    std::string transcript;
    Json planted = Json::array();
    for (std::size_t k = 0; k < utt.words.size(); ++k) {
      const SynthWord& w = utt.words[k];
      if (k) transcript += ' ';
      transcript += w.text;

      char buf[64];
      std::snprintf(buf, sizeof buf, "%s 1 %.3f %.3f %s\n", utt.id.c_str(),
                    w.start_frame * hop_s, (w.end_frame - w.start_frame) * hop_s,
                    w.text.c_str());
      ctm << buf;

      // Phoneme count encodes the region class (6 vs 2).
      lexicon << w.text << (w.big ? " B IH G AH K EY\n" : " S M\n");

      const MatB region = synth_planted_region(w, f_bins, kSynthFrames);
      MatF region_f(region.rows, region.cols);
      for (std::size_t i = 0; i < region.data.size(); ++i) {
        region_f.data[i] = float(region.data[i]);
      }
      const std::string name = utt.id + ".w" + std::to_string(k) + ".fxt";
      write_fxt(dir / "planted" / name, region_f, stamp);
      planted.push_back("planted/" + name);
    }
    entry["transcript"] = transcript;
    entry["planted"] = planted;
    manifest["utterances"].push_back(entry);
  }

  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw DataError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

}  // namespace specsal
