// include/specsal/io.hpp
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

// File formats: 16-bit PCM WAV in/out, sinc resampling, the ".fxt" binary
// float-matrix container, CTM alignments and lexicon files. Binary formats
// are little-endian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "specsal/common.hpp"
#include "specsal/dsp.hpp"
#include "specsal/matrix.hpp"

namespace specsal {

namespace detail {

template <typename T>
void write_le(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& what) {
  char buf[sizeof(T)];
  in.read(buf, sizeof(T));
  if (!in) throw DataError("unexpected end of file reading " + what);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// WAV (16-bit PCM only)

// Writes mono PCM16. Samples with peak above 0.99 are scaled down to avoid
// clipping; the applied scale is returned so manifests can record it.
inline double write_wav_pcm16(const std::filesystem::path& path, const Waveform& w) {
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::fabs(s));
  const double scale = peak > 0.99 ? 0.99 / peak : 1.0;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::uint32_t n = std::uint32_t(w.samples.size());
  const std::uint32_t data_bytes = n * 2;
  out.write("RIFF", 4);
  detail::write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  detail::write_le<std::uint32_t>(out, 16);
  detail::write_le<std::uint16_t>(out, 1);  // PCM
  detail::write_le<std::uint16_t>(out, 1);  // mono
  detail::write_le<std::uint32_t>(out, std::uint32_t(w.sample_rate));
  detail::write_le<std::uint32_t>(out, std::uint32_t(w.sample_rate) * 2);
  detail::write_le<std::uint16_t>(out, 2);
  detail::write_le<std::uint16_t>(out, 16);
  out.write("data", 4);
  detail::write_le<std::uint32_t>(out, data_bytes);
  for (double s : w.samples) {
    const double v = std::clamp(s * scale, -1.0, 1.0);
    detail::write_le<std::int16_t>(out, std::int16_t(std::lround(v * 32767.0)));
  }
  if (!out) throw DataError("write failed for " + path.string());
  return scale;
}

inline Waveform read_wav_pcm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  char tag[5] = {0};
  in.read(tag, 4);
  if (!in || std::strncmp(tag, "RIFF", 4) != 0) {
    throw DataError(path.string() + ": not a RIFF/WAV file");
  }
  detail::read_le<std::uint32_t>(in, "riff size");
  in.read(tag, 4);
  if (!in || std::strncmp(tag, "WAVE", 4) != 0) {
    throw DataError(path.string() + ": not a WAV file");
  }

  Waveform w;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    const auto chunk = detail::read_le<std::uint32_t>(in, "chunk size");
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      const auto format = detail::read_le<std::uint16_t>(in, "format");
      const auto channels = detail::read_le<std::uint16_t>(in, "channels");
      const auto rate = detail::read_le<std::uint32_t>(in, "sample rate");
      detail::read_le<std::uint32_t>(in, "byte rate");
      detail::read_le<std::uint16_t>(in, "block align");
      const auto bits = detail::read_le<std::uint16_t>(in, "bits per sample");
      if (format != 1 || bits != 16) {
        throw DataError(path.string() + ": only 16-bit PCM is supported");
      }
      if (channels != 1) {
        throw DataError(path.string() + ": only mono input is supported (got " +
                        std::to_string(channels) + " channels)");
      }
      w.sample_rate = int(rate);
      in.ignore(std::streamsize(chunk) - 16);
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw DataError(path.string() + ": data chunk before fmt chunk");
      const std::uint32_t n = chunk / 2;
      w.samples.resize(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        w.samples[i] = double(detail::read_le<std::int16_t>(in, "sample")) / 32768.0;
      }
      return w;
    } else {
      in.ignore(std::streamsize(chunk) + (chunk & 1));
    }
  }
  throw DataError(path.string() + ": no data chunk found");
}

// ---------------------------------------------------------------------------
// Resampling (Hann-windowed sinc, 32 taps per side)

inline Waveform resample(const Waveform& in, int target_rate) {
  if (target_rate <= 0) throw DataError("resample: bad target rate");
  if (in.sample_rate == target_rate) return in;
  const double ratio = double(target_rate) / double(in.sample_rate);
  const double cutoff = std::min(1.0, ratio);  // anti-alias when downsampling
  const int taps = 32;
  const std::int64_t n_out = std::int64_t(std::llround(double(in.size()) * ratio));

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(std::size_t(n_out));
  for (std::int64_t n = 0; n < n_out; ++n) {
    const double pos = double(n) / ratio;
    const std::int64_t base = std::int64_t(std::floor(pos));
    double acc = 0.0;
    for (std::int64_t k = base - taps + 1; k <= base + taps; ++k) {
      if (k < 0 || k >= std::int64_t(in.size())) continue;
      const double x = (pos - double(k)) * cutoff;
      const double sinc =
          x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double wpos = (pos - double(k)) / taps;
      const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * wpos);
      acc += in.samples[std::size_t(k)] * sinc * cutoff * window;
    }
    out.samples[std::size_t(n)] = acc;
  }
  return out;
}

// Loads a WAV and brings it to the experiment rate, warning when that
// implies resampling.
inline Waveform load_waveform(const std::filesystem::path& path, int target_rate) {
  Waveform w = read_wav_pcm16(path);
  if (w.sample_rate != target_rate) {
    logging::warn(path.string() + ": resampling " + std::to_string(w.sample_rate) +
                  " Hz -> " + std::to_string(target_rate) + " Hz");
    w = resample(w, target_rate);
  }
  return w;
}

// ---------------------------------------------------------------------------
// .fxt: float matrix container (magic, dims, config hash, row-major f32)

inline constexpr char kFxtMagic[8] = {'S', 'S', 'F', 'X', '0', '0', '0', '1'};

inline void write_fxt(const std::filesystem::path& path, const MatF& m,
                      std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kFxtMagic, 8);
  detail::write_le<std::uint32_t>(out, std::uint32_t(m.rows));
  detail::write_le<std::uint32_t>(out, std::uint32_t(m.cols));
  detail::write_le<std::uint64_t>(out, config_hash);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            std::streamsize(m.data.size() * sizeof(float)));
  if (!out) throw DataError("write failed for " + path.string());
}

struct FxtFile {
  MatF values;
  std::uint64_t config_hash = 0;
};

inline FxtFile read_fxt(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kFxtMagic, 8) != 0) {
    throw DataError(path.string() + ": not a float-matrix (.fxt) file");
  }
  FxtFile f;
  const auto rows = detail::read_le<std::uint32_t>(in, "rows");
  const auto cols = detail::read_le<std::uint32_t>(in, "cols");
  f.config_hash = detail::read_le<std::uint64_t>(in, "config hash");
  if (rows == 0 || cols == 0 || std::uint64_t(rows) * cols > (1u << 30)) {
    throw DataError(path.string() + ": implausible matrix shape");
  }
  f.values = MatF(int(rows), int(cols));
  in.read(reinterpret_cast<char*>(f.values.data.data()),
          std::streamsize(f.values.data.size() * sizeof(float)));
  if (!in) throw DataError(path.string() + ": truncated matrix data");
  return f;
}

// ---------------------------------------------------------------------------
// CTM alignments: "utterance_id channel start_s duration_s word"

struct CtmEntry {
  std::string word;
  double start_s = 0.0;
  double duration_s = 0.0;
};

inline std::map<std::string, std::vector<CtmEntry>> read_ctm(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::map<std::string, std::vector<CtmEntry>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string utt, channel;
    CtmEntry entry;
    if (!(fields >> utt >> channel >> entry.start_s >> entry.duration_s >> entry.word) ||
        entry.start_s < 0.0 || entry.duration_s < 0.0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed CTM line '" + line + "'");
    }
    out[utt].push_back(entry);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lexicon: "word phoneme phoneme ..."

inline std::map<std::string, int> read_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::map<std::string, int> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string word, phoneme;
    if (!(fields >> word)) continue;
    int n = 0;
    while (fields >> phoneme) ++n;
    if (n == 0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": lexicon entry '" + word + "' has no phonemes");
    }
    counts[word] = n;
  }
  return counts;
}

}  // namespace specsal
