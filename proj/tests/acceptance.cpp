// tests/acceptance.cpp
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
//
// Release gate. Runs every acceptance criterion against the library and
// prints one PASS/FAIL line per criterion; exits nonzero if any fail.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "specsal/masks.hpp"
#include "specsal/metrics.hpp"
#include "specsal/pipeline.hpp"
#include "specsal/rng.hpp"
#include "specsal/stats.hpp"
#include "specsal/synth.hpp"
#include "specsal/verify.hpp"

using namespace specsal;
namespace fs = std::filesystem;

namespace {

// Tolerances, frozen. Loosening any of these needs a new release review.
constexpr double kTolMaskAnchorRel = 1e-12;
constexpr double kTolMirrorDb = 1e-9;
constexpr double kTolCorrelation = 1e-10;
constexpr double kTolWorkedCase = 1e-5;
constexpr double kTolStudentT = 1e-8;
constexpr double kMinRoundTripSnrDb = 60.0;
constexpr double kTolEnergySplit = 0.02;

int g_failed = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion-%d %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("specsal-gate-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---- criterion 1: mask anchor values and the morf/lerf mirror ----

void criterion_1() {
  MaskConfig cfg;
  cfg.threshold = 0.01;
  cfg.alpha = 0.5;
  cfg.d0 = -80.0;
  cfg.d1 = 0.0;
  cfg.variant = MaskVariant::kLerf;

  bool ok = bubble_mask_value(0.02, cfg) == 1.0;
  ok = ok && std::abs(bubble_mask_value(0.005, cfg) - 1e-4) <= kTolMaskAnchorRel * 1e-4;
  ok = ok && std::abs(bubble_mask_value(0.0075, cfg) - 1e-2) <= kTolMaskAnchorRel * 1e-2;

  Rng rng(11);
  double max_gap_db = 0.0;
  for (int i = 0; i < 1000; ++i) {
    MaskConfig m;
    m.threshold = std::pow(10.0, rng.uniform(-8.0, -0.5));
    m.alpha = rng.uniform(0.05, 0.95);
    m.d0 = -rng.uniform(20.0, 120.0);
    m.d1 = 0.0;
    const double delta = rng.uniform(0.0, 1.0) * m.threshold;
    m.variant = MaskVariant::kLerf;
    const double lerf = bubble_mask_value(m.threshold - delta, m);
    m.variant = MaskVariant::kMorf;
    const double morf = bubble_mask_value(m.threshold + delta, m);
    max_gap_db = std::max(
        max_gap_db, std::abs(magnitude_to_db(morf) - magnitude_to_db(lerf)));
  }
  ok = ok && max_gap_db <= kTolMirrorDb;
  report(1, ok,
         "mask anchors at 1, 1e-4, 1e-2 (rel tol " + fmt(kTolMaskAnchorRel) +
             "); mirror gap " + fmt(max_gap_db) + " dB over 1000 draws (tol " +
             fmt(kTolMirrorDb) + " dB)");
}

// ---- criterion 2: point-biserial against a long-double Pearson ----

Correlation brute_pearson(const std::vector<double>& d,
                          const std::vector<std::uint8_t>& y) {
  const std::size_t n = d.size();
  long double mean_d = 0.0L, mean_y = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    mean_d += d[i];
    mean_y += y[i];
  }
  mean_d /= n;
  mean_y /= n;
  long double ss_d = 0.0L, ss_y = 0.0L, ss_dy = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dd = d[i] - mean_d;
    const long double dy = y[i] - mean_y;
    ss_d += dd * dd;
    ss_y += dy * dy;
    ss_dy += dd * dy;
  }
  return {double(ss_dy / std::sqrt(ss_d * ss_y)), 0.0};
}

void criterion_2() {
  Rng rng(22);
  double max_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + std::size_t(rng.next_u64() % 498);
    std::vector<double> d(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = rng.uniform();
      y[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    const double got = point_biserial(d, y).r;
    const double want = brute_pearson(d, y).r;
    max_err = std::max(max_err, std::abs(got - want));
  }

  const std::vector<double> d{0.1, 0.9, 0.2, 0.8};
  const std::vector<std::uint8_t> y{0, 1, 0, 1};
  const Correlation c = point_biserial(d, y);
  const bool worked = std::abs(c.r - 0.98995) <= kTolWorkedCase &&
                      std::abs(c.p - 0.01005) <= kTolWorkedCase;

  report(2, max_err <= kTolCorrelation && worked,
         "max |r - pearson| " + fmt(max_err) + " over 1000 draws (tol " +
             fmt(kTolCorrelation) + "); worked case r=" + fmt(c.r) +
             " p=" + fmt(c.p) + " (tol " + fmt(kTolWorkedCase) + ")");
}

// ---- criterion 3: t-test p-values against closed form and quadrature ----

double t_tail_quadrature(double t, double dof) {
  // Two-sided p via Simpson integration of the density over [0, |t|].
  const double x1 = std::abs(t);
  if (x1 == 0.0) return 1.0;
  const int n = 40000;  // even
  const double h = x1 / n;
  const double log_c = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                       0.5 * std::log(dof * 4.0 * std::atan(1.0));
  auto density = [&](double x) {
    return std::exp(log_c - 0.5 * (dof + 1.0) * std::log1p(x * x / dof));
  };
  double sum = density(0.0) + density(x1);
  for (int i = 1; i < n; ++i) sum += density(i * h) * (i % 2 ? 4.0 : 2.0);
  const double body = sum * h / 3.0;
  return std::max(0.0, 1.0 - 2.0 * body);
}

void criterion_3() {
  const std::vector<double> dofs{2.0, 10.0, 100.0, 998.0};
  const std::vector<double> ts{0.0, 0.3, 1.0, 2.5, 7.0, 15.0, 30.0, 50.0};
  double max_err = 0.0;
  bool symmetric = true;
  for (double dof : dofs) {
    for (double t : ts) {
      const double got = student_t_two_sided_p(t, dof);
      max_err = std::max(max_err, std::abs(got - t_tail_quadrature(t, dof)));
      if (dof == 2.0) {
        const double closed = 1.0 - t / std::sqrt(t * t + 2.0);
        max_err = std::max(max_err, std::abs(got - closed));
      }
      symmetric = symmetric && got == student_t_two_sided_p(-t, dof);
    }
  }
  report(3, max_err <= kTolStudentT && symmetric,
         "max p-value error " + fmt(max_err) + " over dof {2,10,100,998}, |t| <= 50 "
         "(tol " + fmt(kTolStudentT) + "); symmetric in t");
}

// ---- criterion 4: analysis/synthesis round trip ----

void criterion_4() {
  Rng rng(44);
  const StftConfig cfg;
  double min_snr = 1e300;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = 8000 + std::size_t(rng.next_u64() % 40000);
    Waveform w{std::vector<double>(len), 16000};
    for (auto& s : w.samples) s = 0.3 * rng.gaussian();
    const Waveform back = istft(stft(w, cfg));
    min_snr = std::min(min_snr, snr_db(w, back));
  }
  report(4, min_snr >= kMinRoundTripSnrDb,
         "round trip min SNR " + fmt(min_snr) + " dB over 100 waveforms (bound " +
             fmt(kMinRoundTripSnrDb) + " dB)");
}

// ---- criterion 5: byte-level determinism of a full run ----

bool trees_identical(const fs::path& a, const fs::path& b, int* n_files) {
  std::vector<fs::path> rel;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), a));
  }
  std::sort(rel.begin(), rel.end());
  *n_files = int(rel.size());
  for (const auto& r : rel) {
    if (!fs::exists(b / r)) return false;
    if (slurp(a / r) != slurp(b / r)) return false;
  }
  return true;
}

void criterion_5() {
  ExperimentConfig cfg;
  cfg.seed = 55;
  cfg.bubble.bubbles_per_second = 240.0;
  cfg.bubble.sigma_time_ms = 30.0;
  cfg.bubble.sigma_mel = 40.0;
  cfg.mixtures_per_utterance = 10;
  cfg.bubble_grid = {1e-4, 1e-2, 1.0};
  cfg.energy_grid_db = {-20.0, 0.0};
  cfg.write_mixtures = WriteMixtures::kAlways;

  const fs::path corpus_dir = fresh_dir("det-corpus");
  const Corpus corpus =
      load_corpus(generate_synthetic_corpus(corpus_dir, 16000, cfg.stft, 2));
  const fs::path out_a = fresh_dir("det-a");
  const fs::path out_b = fresh_dir("det-b");
  Pipeline(cfg, corpus, {out_a, 4, false}).run_all();
  Pipeline(cfg, corpus, {out_b, 1, false}).run_all();

  int n_files = 0;
  const bool same = trees_identical(out_a, out_b, &n_files);
  const bool has_mixtures = fs::exists(out_a / "probe" / "utt00.mix" / "m00009.wav");
  const bool has_maps = fs::exists(out_a / "importance" / "utt00.w0.r.fxt");
  const bool has_csv = fs::exists(out_a / "report" / "ssbm.csv");
  report(5, same && n_files > 0 && has_mixtures && has_maps && has_csv,
         "two runs byte-identical across " + std::to_string(n_files) +
             " files (mixtures, maps, tables)");
}

// ---- criteria 6, 7, 9: the self-verification battery ----

const VerifyCheck* find_check(const VerifyReport& report, const std::string& name) {
  for (const auto& c : report.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

VerifyReport run_battery() {
  const fs::path work = fresh_dir("verify");
  int workers = int(std::thread::hardware_concurrency());
  if (workers < 1) workers = 4;
  return run_verify(work, 1, workers, false);
}

void criterion_67(const VerifyReport& battery) {
  const VerifyCheck* auc = find_check(battery, "importance-auc");
  const VerifyCheck* runtime = find_check(battery, "runtime");
  const bool ok6 = auc && auc->pass && runtime && runtime->pass;
  report(6, ok6,
         std::string("planted-region recovery: ") + (auc ? auc->detail : "missing") +
             "; " + (runtime ? runtime->detail : "missing"));

  const VerifyCheck* ssbm = find_check(battery, "ssbm-ordering");
  const VerifyCheck* curve = find_check(battery, "curve-separation");
  const bool ok7 = ssbm && ssbm->pass && curve && curve->pass;
  report(7, ok7,
         std::string("selectivity: ") + (ssbm ? ssbm->detail : "missing") + "; " +
             (curve ? curve->detail : "missing"));
}

void criterion_9(const VerifyReport& battery) {
  const VerifyCheck* trend = find_check(battery, "region-size-trend");
  report(9, trend && trend->pass,
         std::string("region size vs stabilization: ") +
             (trend ? trend->detail : "missing"));
}

// ---- criterion 8: the two variants split the energy ----

void criterion_8() {
  MaskConfig cfg;
  cfg.threshold = 0.01;
  cfg.alpha = 0.5;
  cfg.d0 = -80.0;
  cfg.d1 = 0.0;

  Rng rng(88);
  double max_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    MatD p_map(64, 50);
    MatD power(64, 50);
    for (std::size_t i = 0; i < p_map.data.size(); ++i) {
      // Nearly all mass far from the threshold; a sliver inside the ramps.
      const double u = rng.uniform();
      if (u < 0.005) {
        p_map.data[i] = cfg.threshold * rng.uniform(0.9, 1.1);
        power.data[i] = rng.uniform(0.0, 0.05);
      } else if (u < 0.5) {
        p_map.data[i] = cfg.threshold * cfg.alpha * rng.uniform(0.05, 0.9);
        power.data[i] = rng.uniform(0.5, 2.0);
      } else {
        p_map.data[i] = rng.uniform(3.0 * cfg.threshold, 1.0);
        power.data[i] = rng.uniform(0.5, 2.0);
      }
    }
    const NoiseMask lerf = lerf_mask_bubble(p_map, cfg);
    const NoiseMask morf = morf_mask_bubble(p_map, cfg);
    const double sum = energy_drop_fraction(power, lerf) +
                       energy_drop_fraction(power, morf);
    max_gap = std::max(max_gap, std::abs(sum - 1.0));
  }

  MatD power2(1, 2);
  power2(0, 0) = 1.0;
  power2(0, 1) = 3.0;
  MatD gains(1, 2);
  gains(0, 0) = 1e-4;
  gains(0, 1) = 1.0;
  const double two_bin = energy_drop_fraction(power2, gains, 0.01);

  report(8, max_gap <= kTolEnergySplit && two_bin == 0.75,
         "max |e_lerf + e_morf - 1| " + fmt(max_gap) + " over 20 spectra (tol " +
             fmt(kTolEnergySplit) + "); two-bin drop " + fmt(two_bin) + " exact");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  const VerifyReport battery = run_battery();
  criterion_67(battery);
  criterion_8();
  criterion_9(battery);
  std::printf("%s: %d criterion(s) failed\n", g_failed == 0 ? "OK" : "GATE FAILED",
              g_failed);
  return g_failed == 0 ? 0 : 1;
}
