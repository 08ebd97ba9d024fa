// tests/test_pipeline.cpp
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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specsal/pipeline.hpp"
#include "specsal/synth.hpp"

using namespace specsal;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("specsal-pipeline-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Small but real: two utterances, 40 mixtures, short threshold grids.
ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.bubble.bubbles_per_second = 240.0;
  cfg.bubble.sigma_time_ms = 30.0;
  cfg.bubble.sigma_mel = 40.0;
  cfg.mixtures_per_utterance = 40;
  cfg.bubble_grid = {1e-6, 1e-4, 1e-2, 1e-1, 1.0};
  cfg.energy_grid_db = {-40.0, -20.0, -10.0, 0.0, 10.0};
  return cfg;
}

Corpus small_corpus(const fs::path& dir, int n_utterances) {
  const fs::path manifest =
      generate_synthetic_corpus(dir, 16000, StftConfig{}, n_utterances);
  return load_corpus(manifest);
}

}  // namespace

TEST_CASE("run_all produces every stage artifact", "[pipeline]") {
  const fs::path corpus_dir = fresh_dir("artifacts-corpus");
  const fs::path out = fresh_dir("artifacts-out");
  const ExperimentConfig cfg = small_config();
  Pipeline pipe(cfg, small_corpus(corpus_dir, 2), {out, 2, false});
  pipe.run_all();

  SECTION("output directory is claimed with the config hash") {
    const Json j = [&] {
      std::ifstream in(out / "config.json");
      Json v;
      in >> v;
      return v;
    }();
    CHECK(j.at("config_hash").get<std::string>() == pipe.hash_hex_str());
    CHECK(j.at("config").at("seed").get<std::uint64_t>() == 7);
  }

  SECTION("probe stage writes one intelligibility table per utterance") {
    REQUIRE(fs::exists(out / "probe" / "utt00.intel.json"));
    REQUIRE(fs::exists(out / "probe" / "utt01.intel.json"));
    const IntelligibilityTable table = pipe.read_intel("utt00");
    CHECK(table.words ==
          std::vector<std::string>{"big000", "sm001", "big002"});
    CHECK(table.values.rows == 40);
    CHECK(table.values.cols == 3);
  }

  SECTION("importance stage writes stamped per-word maps") {
    for (const std::string name :
         {"utt00.w0.r", "utt00.w0.p", "utt00.w1.r", "utt00.w2.p",
          "utt00.smoothed", "utt01.smoothed"}) {
      CAPTURE(name);
      REQUIRE(fs::exists(out / "importance" / (name + ".fxt")));
      const FxtFile f = read_fxt(out / "importance" / (name + ".fxt"));
      CHECK(f.config_hash == pipe.hash());
      CHECK(f.values.rows == 513);
      CHECK(f.values.cols == 101);
    }
    const MatD r = pipe.read_map("utt00.w0.r");
    const MatD p = pipe.read_map("utt00.w0.p");
    bool any_nonzero = false;
    for (std::size_t i = 0; i < r.data.size(); ++i) {
      CHECK(r.data[i] >= -1.0);
      CHECK(r.data[i] <= 1.0);
      CHECK(p.data[i] >= 0.0);
      CHECK(p.data[i] <= 1.0);
      if (r.data[i] != 0.0) any_nonzero = true;
    }
    CHECK(any_nonzero);
  }

  SECTION("evaluate stage writes one record per cell") {
    REQUIRE(fs::exists(out / "evaluate" / "utt00.records.jsonl"));
    REQUIRE(fs::exists(out / "evaluate" / "utt01.transitions.jsonl"));
    const std::vector<EvalRecord> records = pipe.read_records();
    // 2 utterances x 3 words x 2 variants x (5 bubble + 5 energy thresholds).
    CHECK(records.size() == 120);
    for (const EvalRecord& rec : records) {
      CHECK(rec.a_w >= 0.0);
      CHECK(rec.a_w <= 1.0);
      CHECK(rec.e_drop >= 0.0);
      CHECK(rec.e_drop <= 1.0);
    }
    const auto transitions = pipe.read_transitions();
    CHECK(transitions.size() == 6);
    CHECK(transitions[0].word_uid == "utt00.w0");
    CHECK(transitions[0].text == "big000");
  }

  SECTION("report stage writes CSVs stamped with the hash") {
    for (const std::string name :
         {"ssbm.csv", "accuracy_curve.csv", "phoneme_trend.csv"}) {
      CAPTURE(name);
      const std::string text = slurp(out / "report" / name);
      CHECK(text.rfind("# config_hash=" + pipe.hash_hex_str(), 0) == 0);
    }
    std::ifstream in(out / "report" / "summary.json");
    Json summary;
    in >> summary;
    CHECK(summary.at("config_hash").get<std::string>() == pipe.hash_hex_str());
    CHECK(summary.at("utterances").get<int>() == 2);
    CHECK(summary.at("records").get<int>() == 120);
  }
}

TEST_CASE("two runs with the same seed are byte-identical", "[pipeline]") {
  const fs::path corpus_dir = fresh_dir("determinism-corpus");
  ExperimentConfig cfg = small_config();
  cfg.mixtures_per_utterance = 8;
  cfg.bubble_grid = {1e-4, 1e-2, 1.0};
  cfg.energy_grid_db = {-20.0, 0.0};
  cfg.write_mixtures = WriteMixtures::kAlways;
  const Corpus corpus = small_corpus(corpus_dir, 1);

  const fs::path out_a = fresh_dir("determinism-a");
  const fs::path out_b = fresh_dir("determinism-b");
  Pipeline(cfg, corpus, {out_a, 2, false}).run_all();
  Pipeline(cfg, corpus, {out_b, 1, false}).run_all();

  for (const std::string rel :
       {"probe/utt00.intel.json", "probe/utt00.mix/m00003.wav",
        "importance/utt00.w0.r.fxt", "importance/utt00.w1.p.fxt",
        "importance/utt00.smoothed.fxt", "evaluate/utt00.records.jsonl",
        "evaluate/utt00.transitions.jsonl",
        "evaluate/utt00.mix/utt00.w0.bubble.lerf.t00.s0.wav",
        "report/ssbm.csv", "report/accuracy_curve.csv",
        "report/phoneme_trend.csv"}) {
    CAPTURE(rel);
    REQUIRE(fs::exists(out_a / rel));
    CHECK(slurp(out_a / rel) == slurp(out_b / rel));
  }
}

TEST_CASE("an output directory refuses a different configuration", "[pipeline]") {
  const fs::path corpus_dir = fresh_dir("claim-corpus");
  const fs::path out = fresh_dir("claim-out");
  const Corpus corpus = small_corpus(corpus_dir, 1);

  ExperimentConfig cfg = small_config();
  Pipeline first(cfg, corpus, {out, 1, false});
  first.run_probe();

  cfg.seed = 8;
  REQUIRE_THROWS_AS(Pipeline(cfg, corpus, {out, 1, false}), DataError);

  SECTION("the same configuration can resume") {
    cfg.seed = 7;
    Pipeline again(cfg, corpus, {out, 1, true});
    CHECK(again.hash() == first.hash());
    again.run_probe();  // skips via the stage marker
    CHECK(fs::exists(out / "probe" / "done.json"));
  }
}

TEST_CASE("stages require their upstream artifacts", "[pipeline]") {
  const fs::path corpus_dir = fresh_dir("stages-corpus");
  const fs::path out = fresh_dir("stages-out");
  Pipeline pipe(small_config(), small_corpus(corpus_dir, 1), {out, 1, false});
  REQUIRE_THROWS_AS(pipe.run_importance(), DataError);
  REQUIRE_THROWS_AS(pipe.run_evaluate(), DataError);
  REQUIRE_THROWS_AS(pipe.run_report(), DataError);
}

TEST_CASE("load_corpus rejects broken manifests", "[pipeline]") {
  const fs::path dir = fresh_dir("manifest");

  SECTION("missing manifest") {
    REQUIRE_THROWS_AS(load_corpus(dir / "nope.json"), DataError);
  }

  SECTION("unparseable manifest") {
    std::ofstream(dir / "manifest.json") << "{not json";
    REQUIRE_THROWS_AS(load_corpus(dir / "manifest.json"), DataError);
  }

  SECTION("no utterances") {
    std::ofstream(dir / "manifest.json") << R"({"utterances": [], "ctm": "x.ctm"})";
    REQUIRE_THROWS_AS(load_corpus(dir / "manifest.json"), DataError);
  }

  SECTION("dangling wav reference") {
    std::ofstream(dir / "corpus.ctm") << "utt00 1 0.0 0.5 hello\n";
    std::ofstream(dir / "manifest.json") << R"({
      "ctm": "corpus.ctm",
      "utterances": [{"id": "utt00", "wav": "missing.wav", "transcript": "hello"}]
    })";
    REQUIRE_THROWS_AS(load_corpus(dir / "manifest.json"), DataError);
  }

  SECTION("duplicate utterance id") {
    std::ofstream(dir / "corpus.ctm") << "utt00 1 0.0 0.5 hello\n";
    write_wav_pcm16(dir / "a.wav", Waveform{std::vector<double>(1600, 0.1), 16000});
    std::ofstream(dir / "manifest.json") << R"({
      "ctm": "corpus.ctm",
      "utterances": [
        {"id": "utt00", "wav": "a.wav", "transcript": "hello"},
        {"id": "utt00", "wav": "a.wav", "transcript": "hello"}
      ]
    })";
    REQUIRE_THROWS_AS(load_corpus(dir / "manifest.json"), DataError);
  }

  SECTION("a valid synthetic manifest loads") {
    const Corpus corpus = small_corpus(dir / "ok", 2);
    REQUIRE(corpus.utterances.size() == 2);
    CHECK(corpus.utterances[0].id == "utt00");
    CHECK(corpus.utterances[0].planted.size() == 3);
    CHECK(corpus.ctm.count("utt01") == 1);
    CHECK(corpus.lexicon.at("big000") == 6);
  }
}

TEST_CASE("probe drives an external recognizer over wav batches", "[pipeline]") {
  const fs::path corpus_dir = fresh_dir("external-corpus");
  const fs::path out = fresh_dir("external-out");
  ExperimentConfig cfg = small_config();
  cfg.mixtures_per_utterance = 5;
  cfg.recognizer = RecognizerKind::kExternal;
  // Answers every job with the words it cannot hear being dropped: here a
  // fixed two-word hypothesis, so the middle word is always wrong.
  cfg.external.command =
      "awk -F'\\t' '{print $1\"\\tbig000 big002\"}' {job} > {out}";

  Pipeline pipe(cfg, small_corpus(corpus_dir, 1), {out, 1, false});
  pipe.run_probe();

  const IntelligibilityTable table = pipe.read_intel("utt00");
  REQUIRE(table.values.rows == 5);
  for (int j = 0; j < table.values.rows; ++j) {
    CHECK(table.values(j, 0) == 1);
    CHECK(table.values(j, 1) == 0);
    CHECK(table.values(j, 2) == 1);
  }
  // The external path keeps the mixtures it transcribed.
  CHECK(fs::exists(out / "probe" / "utt00.mix" / "m00004.wav"));
}
