// tests/test_config.cpp
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

#include "specsal/config.hpp"

using Catch::Approx;
using namespace specsal;
namespace fs = std::filesystem;

TEST_CASE("default grids", "[config]") {
  const auto bubble = default_bubble_grid();
  REQUIRE(bubble.size() == 25);
  REQUIRE(bubble.front() == Approx(1e-8));
  REQUIRE(bubble.back() == Approx(1.0));
  const auto energy = default_energy_grid_db();
  REQUIRE(energy.size() == 21);
  REQUIRE(energy.front() == -80.0);
  REQUIRE(energy.back() == 20.0);
}

TEST_CASE("config json round trip preserves the hash", "[config]") {
  ExperimentConfig cfg;
  cfg.seed = 777;
  cfg.bubble.bubbles_per_second = 123.0;
  cfg.noise_level_db = -20.0;
  cfg.external.command = "cat {job} > {out}";
  const ExperimentConfig back = config_from_json(to_json(cfg));
  REQUIRE(config_hash(back) == config_hash(cfg));
  REQUIRE(back.seed == 777);
  REQUIRE(back.bubble.bubbles_per_second == 123.0);
  REQUIRE(back.noise_level_db == -20.0);
  REQUIRE(back.external.command == cfg.external.command);
}

TEST_CASE("config hash tracks every knob", "[config]") {
  ExperimentConfig a;
  ExperimentConfig b;
  REQUIRE(config_hash(a) == config_hash(b));
  b.seed = 2;
  REQUIRE(config_hash(a) != config_hash(b));
  b = a;
  b.bubble_grid.pop_back();
  REQUIRE(config_hash(a) != config_hash(b));
  b = a;
  b.oracle_reveal_threshold = 0.55;
  REQUIRE(config_hash(a) != config_hash(b));
}

TEST_CASE("unknown keys are rejected at every level", "[config]") {
  Json j = to_json(ExperimentConfig{});
  SECTION("top level") {
    j["bogus"] = 1;
    REQUIRE_THROWS_AS(config_from_json(j), DataError);
  }
  SECTION("bubble group") {
    j["bubble"]["bogus"] = 1;
    REQUIRE_THROWS_AS(config_from_json(j), DataError);
  }
  SECTION("mask group") {
    j["mask"]["bogus"] = 1;
    REQUIRE_THROWS_AS(config_from_json(j), DataError);
  }
  SECTION("recognizer oracle group") {
    j["recognizer"]["oracle"]["bogus"] = 1;
    REQUIRE_THROWS_AS(config_from_json(j), DataError);
  }
}

TEST_CASE("config validation failures", "[config]") {
  Json base = to_json(ExperimentConfig{});
  auto expect_bad = [&](Json j) { REQUIRE_THROWS_AS(config_from_json(j), DataError); };
  SECTION("sample rate") {
    base["sample_rate"] = 0;
    expect_bad(base);
  }
  SECTION("mel bins") {
    base["mel_bins"] = 1;
    expect_bad(base);
  }
  SECTION("too few mixtures") {
    base["bubble"]["mixtures_per_utterance"] = 2;
    expect_bad(base);
  }
  SECTION("mask alpha") {
    base["mask"]["alpha"] = 1.0;
    expect_bad(base);
  }
  SECTION("mask floor above ceiling") {
    base["mask"]["d0"] = 10.0;
    expect_bad(base);
  }
  SECTION("descending grid") {
    base["mask"]["bubble_grid"] = {0.5, 0.1};
    expect_bad(base);
  }
  SECTION("bubble grid must hold p-values") {
    base["mask"]["bubble_grid"] = {0.5, 1.5};
    expect_bad(base);
  }
  SECTION("reveal threshold") {
    base["recognizer"]["oracle"]["reveal_threshold"] = 1.0;
    expect_bad(base);
  }
  SECTION("external without a command") {
    base["recognizer"]["kind"] = "external";
    expect_bad(base);
  }
  SECTION("unknown recognizer kind") {
    base["recognizer"]["kind"] = "psychic";
    expect_bad(base);
  }
  SECTION("eval noise seeds") {
    base["eval"]["noise_seeds"] = 0;
    expect_bad(base);
  }
  SECTION("write_mixtures spelling") {
    base["write_mixtures"] = "sometimes";
    expect_bad(base);
  }
}

TEST_CASE("effective values fall back to shared knobs", "[config]") {
  ExperimentConfig cfg;
  REQUIRE(cfg.effective_noise_level_db() == cfg.bubble.global_snr_db);
  REQUIRE(cfg.effective_mask_cut() == Approx(0.01));
  cfg.noise_level_db = -10.0;
  cfg.oracle_mask_cut = 0.2;
  REQUIRE(cfg.effective_noise_level_db() == -10.0);
  REQUIRE(cfg.effective_mask_cut() == 0.2);
}

TEST_CASE("config file loading", "[config]") {
  const fs::path dir = fs::temp_directory_path() / "specsal_config";
  fs::create_directories(dir);
  SECTION("round trip through a file") {
    ExperimentConfig cfg;
    cfg.seed = 31;
    const fs::path path = dir / "good.json";
    std::ofstream(path) << to_json(cfg).dump(2);
    const ExperimentConfig back = load_config(path);
    REQUIRE(config_hash(back) == config_hash(cfg));
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_config(dir / "absent.json"), DataError);
  }
  SECTION("parse error") {
    const fs::path path = dir / "broken.json";
    std::ofstream(path) << "{ not json";
    REQUIRE_THROWS_AS(load_config(path), DataError);
  }
}

TEST_CASE("mask config factory copies the mask knobs", "[config]") {
  ExperimentConfig cfg;
  cfg.mask_alpha = 0.25;
  cfg.mask_d0 = -60.0;
  const MaskConfig mc =
      make_mask_config(cfg, MaskMethod::kEnergy, MaskVariant::kMorf, 0.125);
  REQUIRE(mc.threshold == 0.125);
  REQUIRE(mc.alpha == 0.25);
  REQUIRE(mc.d0 == -60.0);
  REQUIRE(mc.d1 == 0.0);
  REQUIRE(mc.method == MaskMethod::kEnergy);
  REQUIRE(mc.variant == MaskVariant::kMorf);
}
