// tests/test_recog.cpp
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

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "specsal/recog.hpp"

using namespace specsal;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("specsal_recog_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("text normalization", "[recog]") {
  REQUIRE(normalize_text("Hello, World!") == "hello world");
  REQUIRE(normalize_text("don't StOp") == "dont stop");
  REQUIRE(normalize_text("Hello, World!", false) == "Hello, World!");
  REQUIRE(tokenize("  a   b\tc\n") == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(tokenize("").empty());
}

TEST_CASE("word scoring against hypotheses", "[recog]") {
  SECTION("deletion in the middle") {
    const WordScore s = score_words({"a", "b", "c"}, {"a", "c"});
    REQUIRE(s == WordScore{1, 0, 1});
  }
  SECTION("substitution") {
    const WordScore s = score_words({"the", "cat", "sat"}, {"the", "hat", "sat"});
    REQUIRE(s == WordScore{1, 0, 1});
  }
  SECTION("leading insertion") {
    const WordScore s = score_words({"a", "b"}, {"x", "a", "b"});
    REQUIRE(s == WordScore{1, 1});
  }
  SECTION("empty hypothesis scores all wrong") {
    const WordScore s = score_words({"a", "b"}, {});
    REQUIRE(s == WordScore{0, 0});
  }
  SECTION("repeated reference words") {
    const WordScore s = score_words({"a", "a", "b"}, {"a", "b"});
    REQUIRE(s == WordScore{1, 0, 1});
  }
  SECTION("empty reference is an error") {
    REQUIRE_THROWS_AS(score_words({}, {"a"}), DataError);
  }
  SECTION("transcript wrapper normalizes") {
    const WordScore s = score_transcripts("The CAT sat.", "the hat sat");
    REQUIRE(s == WordScore{1, 0, 1});
  }
}

TEST_CASE("oracle scores by revealed region energy", "[recog]") {
  // One word, region covering column 0 with energies 1 and 3.
  MatD power(2, 2);
  power(0, 0) = 1.0;
  power(1, 0) = 3.0;
  power(0, 1) = 5.0;
  power(1, 1) = 5.0;
  MatB region(2, 2, 0);
  region(0, 0) = 1;
  region(1, 0) = 1;
  OracleConfig oracle;
  oracle.planted = {region};
  oracle.reveal_threshold = 0.6;
  oracle.mask_cut = 0.01;

  MatD mask(2, 2, 1.0);
  SECTION("revealing the dominant cell is enough") {
    mask(1, 0) = 1e-4;
    REQUIRE(oracle_score_mask(mask, power, oracle) == WordScore{1});
  }
  SECTION("revealing the weak cell is not") {
    mask(0, 0) = 1e-4;
    REQUIRE(oracle_score_mask(mask, power, oracle) == WordScore{0});
  }
  SECTION("a gain exactly at the cut counts as noised") {
    mask(1, 0) = 0.01;
    mask(0, 0) = 1e-4;
    REQUIRE(oracle_score_mask(mask, power, oracle) == WordScore{0});
  }
  SECTION("audibility scoring uses the half-open half point") {
    MatF aud(2, 2, 0.0f);
    aud(1, 0) = 0.51f;
    REQUIRE(oracle_score_audibility(aud, power, oracle) == WordScore{1});
    aud(1, 0) = 0.5f;
    REQUIRE(oracle_score_audibility(aud, power, oracle) == WordScore{0});
  }
}

TEST_CASE("oracle configuration validation", "[recog]") {
  MatD power(2, 2, 1.0);
  MatD mask(2, 2, 1.0);
  OracleConfig oracle;
  MatB region(2, 2, 0);
  region(0, 0) = 1;
  oracle.planted = {region};
  SECTION("threshold range") {
    oracle.reveal_threshold = 1.0;
    REQUIRE_THROWS_AS(oracle_score_mask(mask, power, oracle), DataError);
  }
  SECTION("no planted regions") {
    oracle.planted.clear();
    REQUIRE_THROWS_AS(oracle_score_mask(mask, power, oracle), DataError);
  }
  SECTION("region shape mismatch") {
    oracle.planted = {MatB(3, 2, 1)};
    REQUIRE_THROWS_AS(oracle_score_mask(mask, power, oracle), DataError);
  }
  SECTION("empty region") {
    oracle.planted = {MatB(2, 2, 0)};
    REQUIRE_THROWS_AS(oracle_score_mask(mask, power, oracle), DataError);
  }
  SECTION("region with no clean energy") {
    power(0, 0) = 0.0;
    REQUIRE_THROWS_AS(oracle_score_mask(mask, power, oracle), DataError);
  }
}

TEST_CASE("external recognizer batch protocol", "[recog]") {
  std::vector<JobEntry> jobs = {{"m1", "/tmp/m1.wav"}, {"m2", "/tmp/m2.wav"}};
  SECTION("hypotheses come back in job order") {
    ExternalAdapterConfig adapter;
    adapter.command = "awk -F'\\t' '{print $1\"\\tfoo bar\"}' {job} > {out}";
    const auto records = run_external_batch(jobs, adapter, fresh_dir("ok"));
    REQUIRE(records.size() == 2);
    REQUIRE(records[0].mixture_id == "m1");
    REQUIRE(records[0].hypothesis == "foo bar");
    REQUIRE(records[1].hypothesis == "foo bar");
  }
  SECTION("missing ids are scored as empty hypotheses") {
    ExternalAdapterConfig adapter;
    adapter.command = "printf 'm1\\thello\\n' > {out}";
    const auto records = run_external_batch(jobs, adapter, fresh_dir("missing"));
    REQUIRE(records.size() == 2);
    REQUIRE(records[0].hypothesis == "hello");
    REQUIRE(records[1].hypothesis.empty());
  }
  SECTION("a line without a tab is malformed") {
    ExternalAdapterConfig adapter;
    adapter.command = "printf 'no tab here\\n' > {out}";
    REQUIRE_THROWS_AS(run_external_batch(jobs, adapter, fresh_dir("malformed")),
                      ExternalToolError);
  }
  SECTION("nonzero exit status") {
    ExternalAdapterConfig adapter;
    adapter.command = "false";
    REQUIRE_THROWS_AS(run_external_batch(jobs, adapter, fresh_dir("fails")),
                      ExternalToolError);
  }
  SECTION("command succeeds but writes nothing") {
    ExternalAdapterConfig adapter;
    adapter.command = "true";
    REQUIRE_THROWS_AS(run_external_batch(jobs, adapter, fresh_dir("silent")),
                      ExternalToolError);
  }
  SECTION("empty command") {
    ExternalAdapterConfig adapter;
    REQUIRE_THROWS_AS(run_external_batch(jobs, adapter, fresh_dir("empty")), DataError);
  }
}
