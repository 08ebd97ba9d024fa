// include/specsal/stats.hpp
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

// Correlation/significance machinery: regularized incomplete beta, the
// two-sided Student-t tail, point-biserial correlation and a ranking AUC
// with its standard error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "specsal/common.hpp"

namespace specsal {

namespace detail {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-14;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DataError("incomplete_beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - detail::log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::betacf(a, b, x) / a;
  }
  return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - detail::log_beta(b, a)) *
                   detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided tail probability of Student's t: p = 2*(1 - CDF(|t|; dof)),
// evaluated as I_{dof/(dof+t^2)}(dof/2, 1/2).
inline double student_t_two_sided_p(double t_stat, double dof) {
  if (!(dof >= 1.0)) throw DataError("student_t_two_sided_p: dof must be >= 1");
  if (std::isnan(t_stat)) throw DataError("student_t_two_sided_p: NaN t statistic");
  if (std::isinf(t_stat)) return 0.0;
  const double x = dof / (dof + t_stat * t_stat);
  return std::clamp(incomplete_beta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

struct Correlation {
  double r = 0.0;
  double p = 1.0;
};

// Pearson correlation of a continuous sample against a binary one, with the
// two-sided t-test on n-2 degrees of freedom. Zero variance on either side
// yields the degenerate (r=0, p=1) convention.
inline Correlation point_biserial(std::span<const double> d,
                                  std::span<const std::uint8_t> y) {
  const std::size_t n = d.size();
  if (n != y.size()) throw DataError("point_biserial: length mismatch");
  if (n < 3) throw DataError("point_biserial: need at least 3 samples");

  double sum_d = 0.0;
  std::int64_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(d[i])) throw DataError("point_biserial: NaN in continuous input");
    sum_d += d[i];
    n_pos += (y[i] != 0);
  }
  const double mean_d = sum_d / double(n);
  const double mean_y = double(n_pos) / double(n);

  double ss_d = 0.0, ss_dy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dd = d[i] - mean_d;
    ss_d += dd * dd;
    ss_dy += dd * (double(y[i] != 0) - mean_y);
  }
  const double ss_y = double(n_pos) * (1.0 - mean_y);  // = sum (y - mean_y)^2

  if (ss_d <= 0.0 || ss_y <= 0.0) return {0.0, 1.0};

  double r = ss_dy / std::sqrt(ss_d * ss_y);
  r = std::clamp(r, -1.0, 1.0);
  const double denom = 1.0 - r * r;
  if (denom <= 0.0) return {r, 0.0};
  const double t = r * std::sqrt(double(n - 2) / denom);
  return {r, student_t_two_sided_p(t, double(n - 2))};
}

struct AucResult {
  double auc = 0.5;
  double stderr_hm = 0.0;  // Hanley-McNeil standard error
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
};

// Mann-Whitney AUC of `scores` against binary `labels`, ties get half credit.
inline AucResult ranking_auc(std::span<const double> scores,
                             std::span<const std::uint8_t> labels) {
  const std::size_t n = scores.size();
  if (n != labels.size()) throw DataError("ranking_auc: length mismatch");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  AucResult res;
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * double(i + j - 1) + 1.0;  // 1-based average rank
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        rank_sum_pos += avg_rank;
        ++res.n_pos;
      } else {
        ++res.n_neg;
      }
    }
    i = j;
  }
  if (res.n_pos == 0 || res.n_neg == 0) {
    throw DataError("ranking_auc: need both positive and negative labels");
  }
  const double np = double(res.n_pos), nn = double(res.n_neg);
  const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  const double a = u / (np * nn);
  const double q1 = a / (2.0 - a);
  const double q2 = 2.0 * a * a / (1.0 + a);
  const double var =
      (a * (1.0 - a) + (np - 1.0) * (q1 - a * a) + (nn - 1.0) * (q2 - a * a)) / (np * nn);
  res.auc = a;
  res.stderr_hm = std::sqrt(std::max(var, 0.0));
  return res;
}

}  // namespace specsal
