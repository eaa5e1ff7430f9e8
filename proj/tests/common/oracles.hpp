// Copyright 2026 The ctdr Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Slow, obviously-correct reference implementations shared by the unit tests
// and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace ctdr::oracle {

/// Wilson lower bound evaluated in 50-digit arithmetic.
inline double wilson_lower(std::int64_t k, std::int64_t n, double z_in) {
  using boost::multiprecision::cpp_bin_float_50;
  using boost::multiprecision::sqrt;
  const cpp_bin_float_50 z(z_in);
  const cpp_bin_float_50 nn(n);
  const cpp_bin_float_50 p = cpp_bin_float_50(k) / nn;
  const cpp_bin_float_50 z2 = z * z;
  const cpp_bin_float_50 centre = p + z2 / (2 * nn);
  const cpp_bin_float_50 spread = z * sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
  const cpp_bin_float_50 lower = (centre - spread) / (1 + z2 / nn);
  return static_cast<double>(lower);
}

/// Pairwise Mann-Whitney statistic with ties counted one half.
inline double pairwise_auc(std::span<const double> p, std::span<const int> y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (p[i] > p[j]) wins += 1.0;
      else if (p[i] == p[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// sup |F_a - F_b| evaluated at every sample point.
inline double brute_ks(const std::vector<double>& a, const std::vector<double>& b) {
  auto cdf = [](const std::vector<double>& s, double x) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [x](double v) { return v <= x; })) /
           static_cast<double>(s.size());
  };
  double best = 0.0;
  for (const auto* s : {&a, &b}) {
    for (double x : *s) best = std::max(best, std::abs(cdf(a, x) - cdf(b, x)));
  }
  return best;
}

/// Monotone weighted least squares by enumerating every partition of the
/// score-sorted points into contiguous blocks. Cuts are only allowed between
/// distinct scores. Returns fitted values in input order.
inline std::vector<double> exhaustive_isotonic(std::span<const double> scores, std::span<const double> targets,
                                               std::span<const double> weights) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double best_sse = std::numeric_limits<double>::infinity();
  std::vector<double> best(n);
  const std::uint32_t masks = n == 0 ? 0 : (1u << (n - 1));
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    bool legal = true;
    for (std::size_t c = 0; c + 1 < n; ++c) {
      if ((mask >> c & 1u) && scores[order[c]] == scores[order[c + 1]]) legal = false;
    }
    if (!legal) continue;
    std::vector<double> fitted(n);
    double prev = -std::numeric_limits<double>::infinity();
    double sse = 0.0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < n && legal; ++i) {
      if (i + 1 < n && !(mask >> i & 1u)) continue;
      double sw = 0.0;
      double swy = 0.0;
      for (std::size_t j = start; j <= i; ++j) {
        sw += weights[order[j]];
        swy += weights[order[j]] * targets[order[j]];
      }
      const double mean = swy / sw;
      if (mean < prev - 1e-15) legal = false;
      prev = mean;
      for (std::size_t j = start; j <= i; ++j) {
        fitted[order[j]] = mean;
        sse += weights[order[j]] * (targets[order[j]] - mean) * (targets[order[j]] - mean);
      }
      start = i + 1;
    }
    if (legal && sse < best_sse) {
      best_sse = sse;
      best = fitted;
    }
  }
  return best;
}

}  // namespace ctdr::oracle
