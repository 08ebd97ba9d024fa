// include/specsal/config.hpp
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

// Experiment configuration: a JSON file with defaults for every knob. The
// parsed config is re-serialized in canonical key order and hashed; the
// hash is embedded in every output so stages cannot mix configurations.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "specsal/bubble.hpp"
#include "specsal/common.hpp"
#include "specsal/dsp.hpp"
#include "specsal/masks.hpp"
#include "specsal/recog.hpp"

namespace specsal {

using Json = nlohmann::json;

inline std::vector<double> default_bubble_grid() {
  std::vector<double> grid(25);
  for (int i = 0; i < 25; ++i) grid[std::size_t(i)] = std::pow(10.0, -8.0 + i / 3.0);
  return grid;
}

inline std::vector<double> default_energy_grid_db() {
  std::vector<double> grid(21);
  for (int i = 0; i < 21; ++i) grid[std::size_t(i)] = -80.0 + 5.0 * i;
  return grid;
}

enum class WriteMixtures { kAuto, kAlways, kNever };
enum class RecognizerKind { kOracle, kExternal };

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int sample_rate = 16000;
  StftConfig stft;
  double pre_emphasis_coeff = 0.97;
  int mel_bins = 30;

  BubbleFieldConfig bubble;
  int mixtures_per_utterance = 1000;

  double mask_alpha = 0.5;
  double mask_d0 = -80.0;
  double mask_d1 = 0.0;
  std::vector<double> bubble_grid = default_bubble_grid();
  std::vector<double> energy_grid_db = default_energy_grid_db();
  // Noise level for masked mixtures; NaN means "use bubble.global_snr_db".
  double noise_level_db = std::numeric_limits<double>::quiet_NaN();
  bool continuous_energy_weighting = false;

  RecognizerKind recognizer = RecognizerKind::kOracle;
  double oracle_reveal_threshold = 0.6;
  // NaN means "use the dB midpoint of (d0, d1)".
  double oracle_mask_cut = std::numeric_limits<double>::quiet_NaN();
  ExternalAdapterConfig external;
  bool normalize_text = true;

  int eval_noise_seeds = 1;
  WriteMixtures write_mixtures = WriteMixtures::kAuto;
  bool filter_clean_accuracy = false;

  double effective_noise_level_db() const {
    return std::isnan(noise_level_db) ? bubble.global_snr_db : noise_level_db;
  }
  double effective_mask_cut() const {
    return std::isnan(oracle_mask_cut) ? db_to_magnitude(0.5 * (mask_d0 + mask_d1))
                                       : oracle_mask_cut;
  }

  void validate() const {
    if (sample_rate <= 0) throw DataError("config: sample_rate must be > 0");
    stft.validate(sample_rate);
    if (pre_emphasis_coeff < 0.0 || pre_emphasis_coeff >= 1.0) {
      throw DataError("config: pre_emphasis must be in [0,1)");
    }
    if (mel_bins < 2) throw DataError("config: mel_bins must be >= 2");
    bubble.validate();
    if (mixtures_per_utterance < 3) {
      throw DataError("config: mixtures_per_utterance must be >= 3");
    }
    if (!(mask_alpha > 0.0 && mask_alpha < 1.0)) {
      throw DataError("config: mask.alpha must be in (0,1)");
    }
    if (!(mask_d0 < mask_d1)) throw DataError("config: mask.d0 must be < mask.d1");
    auto check_grid = [](const std::vector<double>& g, const std::string& name) {
      if (g.empty()) throw DataError("config: " + name + " grid is empty");
      for (std::size_t i = 1; i < g.size(); ++i) {
        if (!(g[i] > g[i - 1])) {
          throw DataError("config: " + name + " grid must be strictly ascending");
        }
      }
    };
    check_grid(bubble_grid, "bubble");
    check_grid(energy_grid_db, "energy");
    for (double t : bubble_grid) {
      if (!(t > 0.0) || t > 1.0) {
        throw DataError("config: bubble grid values must be p-values in (0,1]");
      }
    }
    if (!(oracle_reveal_threshold > 0.0 && oracle_reveal_threshold < 1.0)) {
      throw DataError("config: oracle reveal_threshold must be in (0,1)");
    }
    if (recognizer == RecognizerKind::kExternal && external.command.empty()) {
      throw DataError("config: external recognizer selected but no command given");
    }
    if (eval_noise_seeds < 1) throw DataError("config: eval.noise_seeds must be >= 1");
  }
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> known,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok |= (key == k);
    if (!ok) throw DataError("config: unknown key '" + key + "' in " + where);
  }
}

}  // namespace detail

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["sample_rate"] = c.sample_rate;
  j["stft"] = {{"window_ms", c.stft.window_ms},
               {"hop_ms", c.stft.hop_ms},
               {"window", c.stft.window_kind}};
  j["pre_emphasis"] = c.pre_emphasis_coeff;
  j["mel_bins"] = c.mel_bins;
  j["bubble"] = {{"bubbles_per_second", c.bubble.bubbles_per_second},
                 {"sigma_time_ms", c.bubble.sigma_time_ms},
                 {"sigma_mel", c.bubble.sigma_mel},
                 {"floor_db", c.bubble.floor_db},
                 {"global_snr_db", c.bubble.global_snr_db},
                 {"mixtures_per_utterance", c.mixtures_per_utterance}};
  j["mask"] = {{"alpha", c.mask_alpha},
               {"d0", c.mask_d0},
               {"d1", c.mask_d1},
               {"bubble_grid", c.bubble_grid},
               {"energy_grid_db", c.energy_grid_db},
               {"continuous_energy_weighting", c.continuous_energy_weighting}};
  if (!std::isnan(c.noise_level_db)) j["mask"]["noise_level_db"] = c.noise_level_db;
  j["recognizer"] = {
      {"kind", c.recognizer == RecognizerKind::kOracle ? "oracle" : "external"},
      {"normalize_text", c.normalize_text}};
  j["recognizer"]["oracle"] = {{"reveal_threshold", c.oracle_reveal_threshold}};
  if (!std::isnan(c.oracle_mask_cut)) {
    j["recognizer"]["oracle"]["mask_cut"] = c.oracle_mask_cut;
  }
  if (!c.external.command.empty()) {
    j["recognizer"]["external"] = {{"command", c.external.command},
                                   {"serial", c.external.serial}};
  }
  j["eval"] = {{"noise_seeds", c.eval_noise_seeds}};
  switch (c.write_mixtures) {
    case WriteMixtures::kAuto: j["write_mixtures"] = "auto"; break;
    case WriteMixtures::kAlways: j["write_mixtures"] = "always"; break;
    case WriteMixtures::kNever: j["write_mixtures"] = "never"; break;
  }
  j["filter_clean_accuracy"] = c.filter_clean_accuracy;
  return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  detail::reject_unknown_keys(j,
                              {"seed", "sample_rate", "stft", "pre_emphasis", "mel_bins",
                               "bubble", "mask", "recognizer", "eval", "write_mixtures",
                               "filter_clean_accuracy"},
                              "the top level");
  c.seed = j.value("seed", c.seed);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  if (j.contains("stft")) {
    const Json& s = j.at("stft");
    detail::reject_unknown_keys(s, {"window_ms", "hop_ms", "window"}, "stft");
    c.stft.window_ms = s.value("window_ms", c.stft.window_ms);
    c.stft.hop_ms = s.value("hop_ms", c.stft.hop_ms);
    c.stft.window_kind = s.value("window", c.stft.window_kind);
  }
  c.pre_emphasis_coeff = j.value("pre_emphasis", c.pre_emphasis_coeff);
  c.mel_bins = j.value("mel_bins", c.mel_bins);
  if (j.contains("bubble")) {
    const Json& b = j.at("bubble");
    detail::reject_unknown_keys(b,
                                {"bubbles_per_second", "sigma_time_ms", "sigma_mel",
                                 "floor_db", "global_snr_db", "mixtures_per_utterance"},
                                "bubble");
    c.bubble.bubbles_per_second = b.value("bubbles_per_second", c.bubble.bubbles_per_second);
    c.bubble.sigma_time_ms = b.value("sigma_time_ms", c.bubble.sigma_time_ms);
    c.bubble.sigma_mel = b.value("sigma_mel", c.bubble.sigma_mel);
    c.bubble.floor_db = b.value("floor_db", c.bubble.floor_db);
    c.bubble.global_snr_db = b.value("global_snr_db", c.bubble.global_snr_db);
    c.mixtures_per_utterance = b.value("mixtures_per_utterance", c.mixtures_per_utterance);
  }
  if (j.contains("mask")) {
    const Json& m = j.at("mask");
    detail::reject_unknown_keys(m,
                                {"alpha", "d0", "d1", "bubble_grid", "energy_grid_db",
                                 "noise_level_db", "continuous_energy_weighting"},
                                "mask");
    c.mask_alpha = m.value("alpha", c.mask_alpha);
    c.mask_d0 = m.value("d0", c.mask_d0);
    c.mask_d1 = m.value("d1", c.mask_d1);
    if (m.contains("bubble_grid")) c.bubble_grid = m.at("bubble_grid").get<std::vector<double>>();
    if (m.contains("energy_grid_db")) {
      c.energy_grid_db = m.at("energy_grid_db").get<std::vector<double>>();
    }
    if (m.contains("noise_level_db")) c.noise_level_db = m.at("noise_level_db").get<double>();
    c.continuous_energy_weighting =
        m.value("continuous_energy_weighting", c.continuous_energy_weighting);
  }
  if (j.contains("recognizer")) {
    const Json& r = j.at("recognizer");
    detail::reject_unknown_keys(r, {"kind", "oracle", "external", "normalize_text"},
                                "recognizer");
    const std::string kind = r.value("kind", "oracle");
    if (kind == "oracle") {
      c.recognizer = RecognizerKind::kOracle;
    } else if (kind == "external") {
      c.recognizer = RecognizerKind::kExternal;
    } else {
      throw DataError("config: recognizer kind must be 'oracle' or 'external'");
    }
    if (r.contains("oracle")) {
      const Json& o = r.at("oracle");
      detail::reject_unknown_keys(o, {"reveal_threshold", "mask_cut"}, "recognizer.oracle");
      c.oracle_reveal_threshold = o.value("reveal_threshold", c.oracle_reveal_threshold);
      if (o.contains("mask_cut")) c.oracle_mask_cut = o.at("mask_cut").get<double>();
    }
    if (r.contains("external")) {
      const Json& e = r.at("external");
      detail::reject_unknown_keys(e, {"command", "serial"}, "recognizer.external");
      c.external.command = e.value("command", std::string());
      c.external.serial = e.value("serial", false);
    }
    c.normalize_text = r.value("normalize_text", c.normalize_text);
  }
  if (j.contains("eval")) {
    const Json& e = j.at("eval");
    detail::reject_unknown_keys(e, {"noise_seeds"}, "eval");
    c.eval_noise_seeds = e.value("noise_seeds", c.eval_noise_seeds);
  }
  if (j.contains("write_mixtures")) {
    const std::string w = j.at("write_mixtures").get<std::string>();
    if (w == "auto") c.write_mixtures = WriteMixtures::kAuto;
    else if (w == "always") c.write_mixtures = WriteMixtures::kAlways;
    else if (w == "never") c.write_mixtures = WriteMixtures::kNever;
    else throw DataError("config: write_mixtures must be auto, always, or never");
  }
  c.filter_clean_accuracy = j.value("filter_clean_accuracy", c.filter_clean_accuracy);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw DataError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// Stable content hash: nlohmann objects keep keys sorted, so dump() is a
// canonical serialization of the fully defaulted config.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  return fnv1a64(to_json(c).dump());
}

inline MaskConfig make_mask_config(const ExperimentConfig& c, MaskMethod method,
                                   MaskVariant variant, double threshold) {
  MaskConfig mc;
  mc.threshold = threshold;
  mc.alpha = c.mask_alpha;
  mc.d0 = c.mask_d0;
  mc.d1 = c.mask_d1;
  mc.method = method;
  mc.variant = variant;
  return mc;
}

}  // namespace specsal
