// include/specsal/pipeline.hpp
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

// The staged experiment pipeline: probe -> importance -> evaluate -> report.
// Every stage writes into its own subdirectory of the output directory, every
// artifact carries the config hash, and a stage whose completion marker
// matches the hash is skipped on rerun. Outputs hold relative paths and no
// timestamps, so two runs with the same config are byte-identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "specsal/bubble.hpp"
#include "specsal/config.hpp"
#include "specsal/dsp.hpp"
#include "specsal/importance.hpp"
#include "specsal/io.hpp"
#include "specsal/masks.hpp"
#include "specsal/mel.hpp"
#include "specsal/metrics.hpp"
#include "specsal/mix.hpp"
#include "specsal/parallel.hpp"
#include "specsal/recog.hpp"
#include "specsal/rng.hpp"

namespace specsal {

struct CorpusUtterance {
  std::string id;
  std::filesystem::path wav;  // absolute
  std::string transcript;
  std::vector<std::filesystem::path> planted;  // absolute, may be empty
};

struct Corpus {
  std::filesystem::path root;
  std::vector<CorpusUtterance> utterances;
  std::map<std::string, std::vector<CtmEntry>> ctm;
  std::map<std::string, int> lexicon;  // empty when the corpus ships none
};

// manifest.json: {"utterances": [{"id", "wav", "transcript", "planted": [...]}],
// "ctm": ..., "lexicon": ...}. All paths are relative to the manifest.
inline Corpus load_corpus(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot read corpus manifest " + manifest_path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw DataError("corpus manifest " + manifest_path.string() + ": " + e.what());
  }

  Corpus corpus;
  corpus.root = manifest_path.parent_path();
  if (!j.contains("utterances") || !j.at("utterances").is_array() ||
      j.at("utterances").empty()) {
    throw DataError("corpus manifest " + manifest_path.string() +
                    ": needs a non-empty 'utterances' array");
  }
  if (!j.contains("ctm")) {
    throw DataError("corpus manifest " + manifest_path.string() +
                    ": needs a 'ctm' alignment file");
  }
  corpus.ctm = read_ctm(corpus.root / j.at("ctm").get<std::string>());
  if (j.contains("lexicon")) {
    corpus.lexicon = read_lexicon(corpus.root / j.at("lexicon").get<std::string>());
  }

  std::set<std::string> seen;
  for (const Json& entry : j.at("utterances")) {
    CorpusUtterance u;
    std::vector<std::string> planted_rel;
    try {
      u.id = entry.at("id").get<std::string>();
      u.wav = corpus.root / entry.at("wav").get<std::string>();
      u.transcript = entry.at("transcript").get<std::string>();
      if (entry.contains("planted")) {
        planted_rel = entry.at("planted").get<std::vector<std::string>>();
      }
    } catch (const Json::exception& e) {
      throw DataError("corpus manifest: bad utterance entry (" + entry.dump() +
                      "): " + e.what());
    }
    if (!seen.insert(u.id).second) {
      throw DataError("corpus manifest: duplicate utterance id '" + u.id + "'");
    }
    if (!std::filesystem::exists(u.wav)) {
      throw DataError("utterance '" + u.id + "': missing wav file " + u.wav.string());
    }
    if (u.transcript.empty()) {
      throw DataError("utterance '" + u.id + "': empty transcript");
    }
    for (const std::string& rel : planted_rel) {
      auto path = corpus.root / rel;
      if (!std::filesystem::exists(path)) {
        throw DataError("utterance '" + u.id + "': missing planted map " + path.string());
      }
      u.planted.push_back(std::move(path));
    }
    corpus.utterances.push_back(std::move(u));
  }
  return corpus;
}

// Everything derived from one utterance that the stages share.
struct UttData {
  CorpusUtterance meta;
  Waveform clean;
  Spectrogram spec;
  MatD clean_power;
  MatD smoothed;  // pre-emphasized magnitude smoothed by the mel filterbank
  SpecGrid grid;
  std::vector<std::string> tokens;
  std::vector<WordSpan> spans;
  OracleConfig oracle;  // planted regions populated for oracle runs only

  std::string word_uid(std::size_t k) const {
    return meta.id + ".w" + std::to_string(k);
  }
};

class Pipeline {
 public:
  struct Options {
    std::filesystem::path out;
    int workers = int(std::thread::hardware_concurrency());
    bool resume = false;
  };

  Pipeline(ExperimentConfig cfg, Corpus corpus, Options opt)
      : cfg_(std::move(cfg)), corpus_(std::move(corpus)), opt_(std::move(opt)) {
    cfg_.validate();
    if (opt_.workers < 1) opt_.workers = 1;
    if (corpus_.utterances.empty()) throw DataError("pipeline: empty corpus");
    if (cfg_.recognizer == RecognizerKind::kExternal &&
        cfg_.write_mixtures == WriteMixtures::kNever) {
      throw DataError("pipeline: an external recognizer needs mixture wavs; "
                      "write_mixtures=never cannot work");
    }
    hash_ = config_hash(cfg_);
    hex_ = hash_hex(hash_);
    std::filesystem::create_directories(opt_.out);
    claim_out_dir();
  }

  const ExperimentConfig& config() const { return cfg_; }
  const Corpus& corpus() const { return corpus_; }
  std::uint64_t hash() const { return hash_; }
  const std::string& hash_hex_str() const { return hex_; }
  std::filesystem::path out_dir() const { return opt_.out; }
  std::filesystem::path stage_dir(const std::string& stage) const {
    return opt_.out / stage;
  }

  void run_probe() {
    if (skip_stage("probe")) return;
    const auto dir = begin_stage("probe");
    for (std::size_t u = 0; u < corpus_.utterances.size(); ++u) {
      const auto out_path = dir / (corpus_.utterances[u].id + ".intel.json");
      if (opt_.resume && artifact_current(out_path)) continue;
      probe_utterance(make_utt(u), out_path, dir);
    }
    mark_stage("probe");
  }

  void run_importance() {
    require_stage("probe");
    if (skip_stage("importance")) return;
    const auto dir = begin_stage("importance");
    for (std::size_t u = 0; u < corpus_.utterances.size(); ++u) {
      const auto done = dir / (corpus_.utterances[u].id + ".done.json");
      if (opt_.resume && artifact_current(done)) continue;
      importance_utterance(make_utt(u), dir);
      write_json(done, Json{{"config_hash", hex_}, {"utterance", corpus_.utterances[u].id}});
    }
    mark_stage("importance");
  }

  void run_evaluate() {
    require_stage("probe");
    require_stage("importance");
    if (skip_stage("evaluate")) return;
    const auto dir = begin_stage("evaluate");
    for (std::size_t u = 0; u < corpus_.utterances.size(); ++u) {
      const auto out_path = dir / (corpus_.utterances[u].id + ".records.jsonl");
      if (opt_.resume && artifact_current(out_path)) continue;
      evaluate_utterance(make_utt(u), out_path, dir);
    }
    mark_stage("evaluate");
  }

  void run_report() {
    require_stage("evaluate");
    if (skip_stage("report")) return;
    const auto dir = begin_stage("report");
    report_all(dir);
    mark_stage("report");
  }

  void run_all() {
    run_probe();
    run_importance();
    run_evaluate();
    run_report();
  }

  // ---- shared loaders, also used by the verification harness ----

  UttData make_utt(std::size_t index) const {
    const CorpusUtterance& meta = corpus_.utterances[std::size_t(index)];
    UttData utt;
    utt.meta = meta;
    utt.clean = load_waveform(meta.wav, cfg_.sample_rate);
    utt.spec = stft(utt.clean, cfg_.stft);
    utt.clean_power = power(utt.spec);
    utt.grid = SpecGrid::of(utt.spec);
    utt.smoothed = smoothed_magnitude(stft(pre_emphasis(utt.clean, cfg_.pre_emphasis_coeff),
                                           cfg_.stft),
                                      filterbank(utt.spec));
    utt.tokens = tokenize(normalize_text(meta.transcript, cfg_.normalize_text));
    if (utt.tokens.empty()) {
      throw DataError("utterance '" + meta.id + "': transcript has no words");
    }
    utt.spans = word_spans(meta.id, utt.tokens, utt.spec.num_frames());
    if (cfg_.recognizer == RecognizerKind::kOracle) {
      utt.oracle = load_oracle(meta, utt.tokens.size(), utt.spec);
    }
    return utt;
  }

  MelFilterbank filterbank(const Spectrogram& spec) const {
    return MelFilterbank::make(cfg_.mel_bins, spec.freq_axis(), spec.sample_rate);
  }

  IntelligibilityTable read_intel(const std::string& utt_id) const {
    const Json j = read_json(stage_dir("probe") / (utt_id + ".intel.json"));
    IntelligibilityTable table;
    table.words = j.at("words").get<std::vector<std::string>>();
    const auto& rows = j.at("rows");
    table.values = MatB(int(rows.size()), int(table.words.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::string row = rows[r].get<std::string>();
      if (row.size() != table.words.size()) {
        throw DataError("intelligibility table for '" + utt_id + "': row " +
                        std::to_string(r) + " has wrong width");
      }
      for (std::size_t k = 0; k < row.size(); ++k) {
        table.values(int(r), int(k)) = row[k] == '1' ? 1 : 0;
      }
    }
    return table;
  }

  MatD read_map(const std::string& name) const {
    const auto path = stage_dir("importance") / (name + ".fxt");
    const FxtFile f = read_fxt(path);
    if (f.config_hash != hash_) {
      throw DataError(path.string() + ": config hash mismatch; outputs from a "
                      "different configuration cannot be mixed");
    }
    return to_double(f.values);
  }

  Json read_json(const std::filesystem::path& path) const {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    Json j;
    try {
      in >> j;
    } catch (const Json::parse_error& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    if (j.value("config_hash", hex_) != hex_) {
      throw DataError(path.string() + ": config hash mismatch; outputs from a "
                      "different configuration cannot be mixed");
    }
    return j;
  }

  std::vector<EvalRecord> read_records() const {
    std::vector<EvalRecord> records;
    for (const auto& meta : corpus_.utterances) {
      const auto path = stage_dir("evaluate") / (meta.id + ".records.jsonl");
      for_each_jsonl(path, [&](const Json& row) {
        EvalRecord rec;
        rec.utterance_id = row.at("utt").get<std::string>();
        rec.word_id = row.at("word").get<std::string>();
        rec.method = row.at("method").get<std::string>() == "bubble" ? MaskMethod::kBubble
                                                                     : MaskMethod::kEnergy;
        rec.variant = row.at("variant").get<std::string>() == "lerf" ? MaskVariant::kLerf
                                                                     : MaskVariant::kMorf;
        rec.threshold = row.at("threshold").get<double>();
        rec.a_w = row.at("a_w").get<double>();
        if (!row.at("a_o").is_null()) rec.a_o = row.at("a_o").get<double>();
        rec.e_drop = row.at("e_drop").get<double>();
        records.push_back(std::move(rec));
      });
    }
    return records;
  }

  struct TransitionRow {
    std::string utterance_id;
    std::string word_uid;
    std::string text;
    std::optional<double> lerf;
    std::optional<double> morf;
  };

  std::vector<TransitionRow> read_transitions() const {
    std::vector<TransitionRow> rows;
    for (const auto& meta : corpus_.utterances) {
      const auto path = stage_dir("evaluate") / (meta.id + ".transitions.jsonl");
      for_each_jsonl(path, [&](const Json& row) {
        TransitionRow t;
        t.utterance_id = meta.id;
        t.word_uid = row.at("word").get<std::string>();
        t.text = row.at("text").get<std::string>();
        if (!row.at("lerf").is_null()) t.lerf = row.at("lerf").get<double>();
        if (!row.at("morf").is_null()) t.morf = row.at("morf").get<double>();
        rows.push_back(std::move(t));
      });
    }
    return rows;
  }

 private:
  // ---- output directory bookkeeping ----

  void claim_out_dir() {
    const auto path = opt_.out / "config.json";
    if (std::filesystem::exists(path)) {
      std::ifstream in(path);
      Json existing;
      try {
        in >> existing;
      } catch (const Json::parse_error&) {
        throw DataError(path.string() + " is corrupt; use a fresh output directory");
      }
      if (existing.value("config_hash", "") != hex_) {
        throw DataError("output directory " + opt_.out.string() +
                        " holds results for config hash " +
                        existing.value("config_hash", "?") + " but this run has " + hex_ +
                        "; use a fresh output directory");
      }
      return;
    }
    write_json(path, Json{{"config_hash", hex_}, {"config", to_json(cfg_)}});
  }

  bool skip_stage(const std::string& stage) {
    const auto marker = stage_dir(stage) / "done.json";
    if (!std::filesystem::exists(marker)) return false;
    read_json(marker);  // throws on hash mismatch
    logging::info("stage '" + stage + "' already complete; skipping");
    return true;
  }

  std::filesystem::path begin_stage(const std::string& stage) {
    const auto dir = stage_dir(stage);
    if (std::filesystem::exists(dir) && !opt_.resume) {
      std::filesystem::remove_all(dir);
    }
    std::filesystem::create_directories(dir);
    return dir;
  }

  void mark_stage(const std::string& stage) {
    write_json(stage_dir(stage) / "done.json",
               Json{{"config_hash", hex_}, {"stage", stage}});
  }

  void require_stage(const std::string& stage) const {
    const auto marker = stage_dir(stage) / "done.json";
    if (!std::filesystem::exists(marker)) {
      throw DataError("stage '" + stage + "' has not completed in " + opt_.out.string() +
                      "; run it first");
    }
  }

  bool artifact_current(const std::filesystem::path& path) const {
    if (!std::filesystem::exists(path)) return false;
    try {
      if (path.extension() == ".jsonl") {
        for_each_jsonl(path, [](const Json&) {});
      } else {
        read_json(path);
      }
      return true;
    } catch (const std::exception&) {
      return false;  // truncated or stale; recompute
    }
  }

  void write_json(const std::filesystem::path& path, const Json& j) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed for " + path.string());
  }

  // First line is a header object carrying the config hash.
  template <typename Fn>
  void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) const {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
      }
      if (first) {
        first = false;
        if (j.value("config_hash", "") != hex_) {
          throw DataError(path.string() + ": config hash mismatch; outputs from a "
                          "different configuration cannot be mixed");
        }
        continue;
      }
      fn(j);
    }
    if (first) throw DataError(path.string() + ": missing header line");
  }

  // ---- corpus plumbing ----

  std::vector<WordSpan> word_spans(const std::string& utt_id,
                                   const std::vector<std::string>& tokens,
                                   int t_frames) const {
    auto it = corpus_.ctm.find(utt_id);
    if (it == corpus_.ctm.end()) {
      throw DataError("utterance '" + utt_id + "' has no CTM alignment");
    }
    const auto& entries = it->second;
    if (entries.size() != tokens.size()) {
      throw DataError("utterance '" + utt_id + "': transcript has " +
                      std::to_string(tokens.size()) + " words but the CTM has " +
                      std::to_string(entries.size()));
    }
    const double hop_s =
        double(cfg_.stft.hop_samples(cfg_.sample_rate)) / double(cfg_.sample_rate);
    std::vector<WordSpan> spans;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string ctm_word = normalize_text(entries[k].word, cfg_.normalize_text);
      if (ctm_word != tokens[k]) {
        throw DataError("utterance '" + utt_id + "': word " + std::to_string(k) +
                        " is '" + tokens[k] + "' in the transcript but '" + ctm_word +
                        "' in the CTM");
      }
      WordSpan span;
      span.word_id = utt_id + ".w" + std::to_string(k);
      span.text = tokens[k];
      span.start_frame = int(std::lround(entries[k].start_s / hop_s));
      span.end_frame =
          int(std::lround((entries[k].start_s + entries[k].duration_s) / hop_s));
      span.start_frame = std::clamp(span.start_frame, 0, t_frames);
      span.end_frame = std::clamp(span.end_frame, span.start_frame, t_frames);
      auto lex = corpus_.lexicon.find(tokens[k]);
      if (lex != corpus_.lexicon.end()) span.phoneme_count = lex->second;
      spans.push_back(std::move(span));
    }
    return spans;
  }

  OracleConfig load_oracle(const CorpusUtterance& meta, std::size_t n_words,
                           const Spectrogram& spec) const {
    if (meta.planted.size() != n_words) {
      throw DataError("utterance '" + meta.id + "': oracle recognizer needs one "
                      "planted region per word (" + std::to_string(n_words) +
                      " words, " + std::to_string(meta.planted.size()) + " regions)");
    }
    OracleConfig oracle;
    oracle.reveal_threshold = cfg_.oracle_reveal_threshold;
    oracle.mask_cut = cfg_.effective_mask_cut();
    for (const auto& path : meta.planted) {
      const FxtFile f = read_fxt(path);
      if (f.values.rows != spec.num_bins() || f.values.cols != spec.num_frames()) {
        throw DataError("planted map " + path.string() + " is " +
                        std::to_string(f.values.rows) + "x" +
                        std::to_string(f.values.cols) + " but the spectrogram is " +
                        std::to_string(spec.num_bins()) + "x" +
                        std::to_string(spec.num_frames()));
      }
      MatB region(f.values.rows, f.values.cols);
      for (std::size_t i = 0; i < region.data.size(); ++i) {
        region.data[i] = f.values.data[i] > 0.5f ? 1 : 0;
      }
      oracle.planted.push_back(std::move(region));
    }
    return oracle;
  }

  std::uint64_t field_seed(const std::string& utt_id, std::int64_t j) const {
    return derive_seed(cfg_.seed, "probe:" + utt_id, std::uint64_t(j));
  }

  // ---- probe ----

  void probe_utterance(const UttData& utt, const std::filesystem::path& out_path,
                       const std::filesystem::path& dir) {
    const int j_total = cfg_.mixtures_per_utterance;
    const int k_words = int(utt.tokens.size());
    const double duration = utt.clean.duration_s();
    const bool external = cfg_.recognizer == RecognizerKind::kExternal;
    const bool write_wavs = cfg_.write_mixtures == WriteMixtures::kAlways ||
                            (external && cfg_.write_mixtures == WriteMixtures::kAuto);

    std::filesystem::path mix_dir = dir / (utt.meta.id + ".mix");
    if (write_wavs) std::filesystem::create_directories(mix_dir);

    MatB table(j_total, k_words);
    std::vector<std::string> wav_names(static_cast<std::size_t>(j_total));
    parallel_for(j_total, opt_.workers, [&](std::int64_t j) {
      const AudibilityMap field =
          generate_bubble_field(field_seed(utt.meta.id, j), cfg_.bubble, utt.grid, duration);
      if (write_wavs) {
        Waveform mix = render_bubble_mixture(utt.clean, field, cfg_.bubble, cfg_.stft);
        char name[32];
        std::snprintf(name, sizeof name, "m%05d.wav", int(j));
        write_wav_pcm16(mix_dir / name, mix);
        wav_names[std::size_t(j)] = name;
      }
      if (!external) {
        const WordScore score =
            oracle_score_audibility(field.values, utt.clean_power, utt.oracle);
        for (int k = 0; k < k_words; ++k) table(int(j), k) = score[std::size_t(k)];
      }
    });

    if (external) {
      std::vector<JobEntry> jobs;
      jobs.reserve(std::size_t(j_total));
      for (int j = 0; j < j_total; ++j) {
        jobs.push_back({utt.meta.id + ".m" + std::to_string(j),
                        (mix_dir / wav_names[std::size_t(j)]).string()});
      }
      const auto hyps =
          run_external_batch(jobs, cfg_.external, dir / (utt.meta.id + ".scratch"));
      for (int j = 0; j < j_total; ++j) {
        const WordScore score = score_transcripts(utt.meta.transcript,
                                                  hyps[std::size_t(j)].hypothesis,
                                                  cfg_.normalize_text);
        for (int k = 0; k < k_words; ++k) table(int(j), k) = score[std::size_t(k)];
      }
    }

    Json out;
    out["config_hash"] = hex_;
    out["utterance"] = utt.meta.id;
    out["words"] = utt.tokens;
    out["mixtures"] = j_total;
    Json rows = Json::array();
    for (int j = 0; j < j_total; ++j) {
      std::string row(std::size_t(k_words), '0');
      for (int k = 0; k < k_words; ++k) row[std::size_t(k)] = table(j, k) ? '1' : '0';
      rows.push_back(row);
    }
    out["rows"] = std::move(rows);
    if (write_wavs) {
      Json mixtures = Json::array();
      for (int j = 0; j < j_total; ++j) {
        mixtures.push_back(utt.meta.id + ".mix/" + wav_names[std::size_t(j)]);
      }
      out["mixture_wavs"] = std::move(mixtures);
    }
    write_json(out_path, out);
  }

  // ---- importance ----

  void importance_utterance(const UttData& utt, const std::filesystem::path& dir) {
    const IntelligibilityTable table = read_intel(utt.meta.id);
    if (table.words != utt.tokens) {
      throw DataError("utterance '" + utt.meta.id +
                      "': probe table words do not match the transcript");
    }
    const int j_total = table.num_mixtures();
    const int k_words = table.num_words();
    const double duration = utt.clean.duration_s();

    BubbleCorrelationAccumulator acc(utt.spec.num_bins(), utt.spec.num_frames(), k_words);
    const int chunk = 64;
    std::vector<MatF> fields(static_cast<std::size_t>(std::min(chunk, j_total)));
    std::vector<std::uint8_t> row(static_cast<std::size_t>(k_words));
    for (int base = 0; base < j_total; base += chunk) {
      const int n = std::min(chunk, j_total - base);
      parallel_for(n, opt_.workers, [&](std::int64_t i) {
        fields[std::size_t(i)] =
            generate_bubble_field(field_seed(utt.meta.id, base + i), cfg_.bubble, utt.grid,
                                  duration)
                .values;
      });
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < k_words; ++k) row[std::size_t(k)] = table.values(base + i, k);
        acc.add(fields[std::size_t(i)], row);
      }
    }

    for (int k = 0; k < k_words; ++k) {
      const ImportanceMap map = acc.finalize(k, utt.word_uid(std::size_t(k)));
      write_fxt(dir / (utt.word_uid(std::size_t(k)) + ".r.fxt"), to_float(map.r), hash_);
      write_fxt(dir / (utt.word_uid(std::size_t(k)) + ".p.fxt"), to_float(map.p), hash_);
    }
    write_fxt(dir / (utt.meta.id + ".smoothed.fxt"), to_float(utt.smoothed), hash_);
  }

  // ---- evaluate ----

  struct EvalCell {
    int word = 0;
    MaskMethod method = MaskMethod::kBubble;
    MaskVariant variant = MaskVariant::kLerf;
    int grid_index = 0;
    double threshold = 0.0;  // grid value (p or t_dB)
  };

  void evaluate_utterance(const UttData& utt, const std::filesystem::path& out_path,
                          const std::filesystem::path& dir) {
    const int k_words = int(utt.tokens.size());
    std::vector<MatD> p_maps;
    p_maps.reserve(std::size_t(k_words));
    for (int k = 0; k < k_words; ++k) {
      p_maps.push_back(read_map(utt.word_uid(std::size_t(k)) + ".p"));
    }
    const MatD smoothed = read_map(utt.meta.id + ".smoothed");
    double energy_ref = 0.0;
    for (double v : smoothed.data) energy_ref = std::max(energy_ref, v);
    if (!(energy_ref > 0.0)) {
      throw DataError("utterance '" + utt.meta.id + "': silent smoothed spectrogram");
    }

    std::vector<EvalCell> cells;
    for (int k = 0; k < k_words; ++k) {
      for (MaskVariant variant : {MaskVariant::kLerf, MaskVariant::kMorf}) {
        for (std::size_t i = 0; i < cfg_.bubble_grid.size(); ++i) {
          cells.push_back({k, MaskMethod::kBubble, variant, int(i), cfg_.bubble_grid[i]});
        }
        for (std::size_t i = 0; i < cfg_.energy_grid_db.size(); ++i) {
          cells.push_back({k, MaskMethod::kEnergy, variant, int(i), cfg_.energy_grid_db[i]});
        }
      }
    }

    const bool external = cfg_.recognizer == RecognizerKind::kExternal;
    std::vector<double> a_w_all(cells.size() * std::size_t(k_words), 0.0);
    std::vector<double> e_drop(cells.size(), 0.0);

    auto build_mask = [&](const EvalCell& cell) {
      MaskConfig mc = make_mask_config(
          cfg_, cell.method, cell.variant,
          cell.method == MaskMethod::kBubble
              ? cell.threshold
              : db_to_magnitude(cell.threshold) * energy_ref);
      if (cell.method == MaskMethod::kBubble) {
        const MatD& p_map = p_maps[std::size_t(cell.word)];
        return cell.variant == MaskVariant::kLerf ? lerf_mask_bubble(p_map, mc)
                                                  : morf_mask_bubble(p_map, mc);
      }
      const WordSpan& span = utt.spans[std::size_t(cell.word)];
      return cell.variant == MaskVariant::kLerf ? lerf_mask_energy(smoothed, span, mc)
                                                : morf_mask_energy(smoothed, span, mc);
    };

    std::filesystem::path mix_dir = dir / (utt.meta.id + ".mix");
    const bool write_wavs =
        external || cfg_.write_mixtures == WriteMixtures::kAlways;
    if (write_wavs) std::filesystem::create_directories(mix_dir);
    std::vector<JobEntry> jobs(external ? cells.size() * std::size_t(cfg_.eval_noise_seeds)
                                        : 0);

    parallel_for(std::int64_t(cells.size()), opt_.workers, [&](std::int64_t c) {
      const EvalCell& cell = cells[std::size_t(c)];
      const NoiseMask mask = build_mask(cell);
      e_drop[std::size_t(c)] =
          cfg_.continuous_energy_weighting
              ? energy_drop_fraction_continuous(utt.clean_power, mask.values)
              : energy_drop_fraction(utt.clean_power, mask);
      if (!external) {
        const WordScore score = oracle_score_mask(mask.values, utt.clean_power, utt.oracle);
        for (int k = 0; k < k_words; ++k) {
          a_w_all[std::size_t(c) * std::size_t(k_words) + std::size_t(k)] =
              double(score[std::size_t(k)]);
        }
      }
      if (write_wavs) {
        for (int s = 0; s < cfg_.eval_noise_seeds; ++s) {
          const std::string cell_id = cell_name(utt, cell, s);
          const auto seed = derive_seed(cfg_.seed, "eval:" + cell_id);
          Waveform mix = render_masked_mixture(utt.clean, mask, seed,
                                               cfg_.effective_noise_level_db(), cfg_.stft);
          const auto wav_path = mix_dir / (cell_id + ".wav");
          write_wav_pcm16(wav_path, mix);
          if (external) {
            jobs[std::size_t(c) * std::size_t(cfg_.eval_noise_seeds) + std::size_t(s)] = {
                cell_id, wav_path.string()};
          }
        }
      }
    });

    std::vector<std::uint8_t> clean_ok(std::size_t(k_words), 1);
    if (external) {
      if (cfg_.filter_clean_accuracy) {
        const auto clean_hyps = run_external_batch(
            {{utt.meta.id + ".clean", utt.meta.wav.string()}}, cfg_.external,
            dir / (utt.meta.id + ".scratch"));
        const WordScore score = score_transcripts(utt.meta.transcript,
                                                  clean_hyps[0].hypothesis,
                                                  cfg_.normalize_text);
        for (int k = 0; k < k_words; ++k) clean_ok[std::size_t(k)] = score[std::size_t(k)];
      }
      const auto hyps =
          run_external_batch(jobs, cfg_.external, dir / (utt.meta.id + ".scratch"));
      for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<double> sums(std::size_t(k_words), 0.0);
        for (int s = 0; s < cfg_.eval_noise_seeds; ++s) {
          const WordScore score = score_transcripts(
              utt.meta.transcript,
              hyps[c * std::size_t(cfg_.eval_noise_seeds) + std::size_t(s)].hypothesis,
              cfg_.normalize_text);
          for (int k = 0; k < k_words; ++k) sums[std::size_t(k)] += score[std::size_t(k)];
        }
        for (int k = 0; k < k_words; ++k) {
          a_w_all[c * std::size_t(k_words) + std::size_t(k)] =
              sums[std::size_t(k)] / cfg_.eval_noise_seeds;
        }
      }
    }

    // Transitions first: the records file doubles as this utterance's resume
    // marker, so everything else must already be on disk when it appears.
    write_transitions(utt, cells, a_w_all, clean_ok,
                      dir / (utt.meta.id + ".transitions.jsonl"));

    // Records: the analyzed word of each cell plus the mean over the others.
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path.string());
    out << Json{{"config_hash", hex_}, {"utterance", utt.meta.id}}.dump() << '\n';
    int filtered = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const EvalCell& cell = cells[c];
      if (!clean_ok[std::size_t(cell.word)]) {
        ++filtered;
        continue;
      }
      Json row;
      row["utt"] = utt.meta.id;
      row["word"] = utt.word_uid(std::size_t(cell.word));
      row["text"] = utt.tokens[std::size_t(cell.word)];
      row["method"] = to_string(cell.method);
      row["variant"] = to_string(cell.variant);
      row["threshold"] = cell.threshold;
      row["a_w"] = a_w_all[c * std::size_t(k_words) + std::size_t(cell.word)];
      double sum_o = 0.0;
      int n_o = 0;
      for (int k = 0; k < k_words; ++k) {
        if (k == cell.word || !clean_ok[std::size_t(k)]) continue;
        sum_o += a_w_all[c * std::size_t(k_words) + std::size_t(k)];
        ++n_o;
      }
      if (n_o > 0) {
        row["a_o"] = sum_o / n_o;
      } else {
        row["a_o"] = nullptr;
      }
      row["e_drop"] = e_drop[c];
      out << row.dump() << '\n';
    }
    if (!out) throw DataError("write failed for " + out_path.string());
    if (filtered > 0) {
      logging::warn("utterance '" + utt.meta.id + "': " + std::to_string(filtered) +
                    " records dropped because the word was wrong on clean speech");
    }
  }

  std::string cell_name(const UttData& utt, const EvalCell& cell, int noise_seed) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, ".%s.%s.t%02d.s%d", to_string(cell.method).c_str(),
                  to_string(cell.variant).c_str(), cell.grid_index, noise_seed);
    return utt.word_uid(std::size_t(cell.word)) + buf;
  }

  // Stabilization thresholds over the bubble grid, per word and variant.
  void write_transitions(const UttData& utt, const std::vector<EvalCell>& cells,
                         const std::vector<double>& a_w_all,
                         const std::vector<std::uint8_t>& clean_ok,
                         const std::filesystem::path& path) const {
    const int k_words = int(utt.tokens.size());
    const std::size_t grid_n = cfg_.bubble_grid.size();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << Json{{"config_hash", hex_}, {"utterance", utt.meta.id}}.dump() << '\n';

    for (int k = 0; k < k_words; ++k) {
      if (!clean_ok[std::size_t(k)]) continue;
      std::vector<std::uint8_t> lerf_ok(grid_n, 0), morf_ok(grid_n, 0);
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const EvalCell& cell = cells[c];
        if (cell.word != k || cell.method != MaskMethod::kBubble) continue;
        const double a_w = a_w_all[c * std::size_t(k_words) + std::size_t(k)];
        auto& dest = cell.variant == MaskVariant::kLerf ? lerf_ok : morf_ok;
        dest[std::size_t(cell.grid_index)] = a_w >= 0.5 ? 1 : 0;
      }
      const auto lerf = transition_threshold(lerf_ok, cfg_.bubble_grid, MaskVariant::kLerf);
      const auto morf = transition_threshold(morf_ok, cfg_.bubble_grid, MaskVariant::kMorf);
      Json row;
      row["word"] = utt.word_uid(std::size_t(k));
      row["text"] = utt.tokens[std::size_t(k)];
      row["lerf"] = lerf ? Json(*lerf) : Json(nullptr);
      row["morf"] = morf ? Json(*morf) : Json(nullptr);
      out << row.dump() << '\n';
    }
    if (!out) throw DataError("write failed for " + path.string());
  }

  // ---- report ----

  static std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
  }
  static std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_g(*v) : std::string();
  }

  void report_all(const std::filesystem::path& dir) const {
    const std::vector<EvalRecord> records = read_records();
    const SSBMReport ssbm = sweep_thresholds(records);

    {
      std::ofstream out(dir / "ssbm.csv");
      out << "# config_hash=" << hex_ << '\n'
          << "method,threshold,mean_delta_lerf,mean_delta_morf,ssbm,n_lerf,n_morf,"
             "excluded_lerf,excluded_morf\n";
      for (const SSBMRow& row : ssbm.rows) {
        out << to_string(row.method) << ',' << fmt_g(row.threshold) << ','
            << fmt_opt(row.mean_delta_lerf) << ',' << fmt_opt(row.mean_delta_morf) << ','
            << fmt_opt(row.ssbm) << ',' << row.n_lerf << ',' << row.n_morf << ','
            << row.excluded_lerf << ',' << row.excluded_morf << '\n';
      }
      if (!out) throw DataError("write failed for ssbm.csv");
    }

    {
      std::ofstream out(dir / "accuracy_curve.csv");
      out << "# config_hash=" << hex_ << '\n'
          << "method,variant,percent,mean_accuracy,count\n";
      for (MaskMethod method : {MaskMethod::kBubble, MaskMethod::kEnergy}) {
        for (MaskVariant variant : {MaskVariant::kLerf, MaskVariant::kMorf}) {
          std::vector<std::pair<double, double>> pairs;
          for (const EvalRecord& rec : records) {
            if (rec.method == method && rec.variant == variant) {
              pairs.push_back({rec.e_drop, rec.a_w});
            }
          }
          if (pairs.empty()) continue;
          for (const AccuracyBin& bin : accuracy_by_energy_bin(pairs)) {
            out << to_string(method) << ',' << to_string(variant) << ',' << bin.percent
                << ',' << fmt_g(bin.mean_accuracy) << ',' << bin.count << '\n';
          }
        }
      }
      if (!out) throw DataError("write failed for accuracy_curve.csv");
    }

    std::vector<PhonemeStat> stats;
    for (const TransitionRow& row : read_transitions()) {
      PhonemeStat s;
      s.word_id = row.word_uid;
      auto lex = corpus_.lexicon.find(row.text);
      s.phoneme_count = lex == corpus_.lexicon.end() ? -1 : lex->second;
      s.lerf_transition = row.lerf;
      s.morf_transition = row.morf;
      stats.push_back(std::move(s));
    }
    const auto trend = phoneme_trend(stats);
    {
      std::ofstream out(dir / "phoneme_trend.csv");
      out << "# config_hash=" << hex_ << '\n'
          << "phoneme_count,mean_lerf_transition,mean_morf_transition,n_lerf,n_morf\n";
      for (const PhonemeTrendRow& row : trend) {
        out << row.phoneme_count << ',' << fmt_opt(row.mean_lerf) << ','
            << fmt_opt(row.mean_morf) << ',' << row.n_lerf << ',' << row.n_morf << '\n';
      }
      if (!out) throw DataError("write failed for phoneme_trend.csv");
    }
    if (trend.empty()) {
      logging::warn("phoneme trend has no data (missing lexicon or no stable words)");
    }

    Json summary;
    summary["config_hash"] = hex_;
    summary["utterances"] = corpus_.utterances.size();
    summary["records"] = records.size();
    summary["best"] = Json::object();
    for (const auto& [method, best] : ssbm.best) {
      summary["best"][method] = {{"threshold", best.threshold}, {"ssbm", best.ssbm}};
    }
    summary["phoneme_trend_rows"] = trend.size();
    write_json(dir / "summary.json", summary);
  }

  ExperimentConfig cfg_;
  Corpus corpus_;
  Options opt_;
  std::uint64_t hash_ = 0;
  std::string hex_;
};

}  // namespace specsal
