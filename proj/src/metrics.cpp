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

#include "ctdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctdr/errors.hpp"

namespace ctdr {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw LengthMismatch(std::to_string(a) + " vs " + std::to_string(b));
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> y) {
  std::size_t pos = 0;
  for (int v : y) pos += v != 0 ? 1 : 0;
  return {pos, y.size() - pos};
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1_of(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

double auc_roc(std::span<const double> p, std::span<const int> y) {
  check_lengths(p.size(), y.size());
  const auto [n_pos, n_neg] = class_counts(y);
  if (n_pos == 0 || n_neg == 0) throw SingleClass("AUC needs both classes");
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && p[order[j]] == p[order[i]]) ++j;
    // Ranks i+1 .. j share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (y[order[k]] != 0) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double brier(std::span<const double> p, std::span<const int> y) {
  check_lengths(p.size(), y.size());
  if (p.empty()) throw EmptyInput("brier of nothing");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - (y[i] != 0 ? 1.0 : 0.0);
    s += d * d;
  }
  return s / static_cast<double>(p.size());
}

double log_loss(std::span<const double> p, std::span<const int> y) {
  check_lengths(p.size(), y.size());
  if (p.empty()) throw EmptyInput("log loss of nothing");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
    s -= y[i] != 0 ? std::log(q) : std::log1p(-q);
  }
  return s / static_cast<double>(p.size());
}

MetricsReport confusion_metrics(std::span<const double> p, std::span<const int> y, double t) {
  check_lengths(p.size(), y.size());
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool predicted = p[i] >= t;
    const bool actual = y[i] != 0;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  MetricsReport m;
  m.threshold = t;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = f1_of(m.precision, m.recall);
  const double neg_precision = ratio(tn, tn + fn);
  const double specificity = ratio(tn, tn + fp);
  m.f1_macro = 0.5 * (m.f1 + f1_of(neg_precision, specificity));
  m.balanced_accuracy = 0.5 * (m.recall + specificity);
  m.accuracy = ratio(tp + tn, tp + fp + fn + tn);
  return m;
}

MetricsReport evaluate_metrics(std::span<const double> p, std::span<const int> y, double t,
                               std::string variant, std::string split) {
  MetricsReport m = confusion_metrics(p, y, t);
  m.auc = auc_roc(p, y);
  m.brier = brier(p, y);
  m.variant = std::move(variant);
  m.split = std::move(split);
  return m;
}

ThresholdChoice select_threshold_max_f1(std::span<const double> p, std::span<const int> y) {
  check_lengths(p.size(), y.size());
  const auto [n_pos, n_neg] = class_counts(y);
  if (n_pos == 0 || n_neg == 0) throw SingleClass("threshold selection needs both classes");
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  ThresholdChoice best{p[order.front()], -1.0};
  double tp = 0, fp = 0;
  const double pos = static_cast<double>(n_pos);
  // Lowering t one distinct value at a time; >= keeps the smallest t on ties.
  for (std::size_t i = 0; i < order.size();) {
    const double t = p[order[i]];
    while (i < order.size() && p[order[i]] == t) {
      (y[order[i]] != 0 ? tp : fp) += 1.0;
      ++i;
    }
    const double f1 = 2.0 * tp / (2.0 * tp + fp + (pos - tp));
    if (f1 >= best.f1) best = {t, f1};
  }
  return best;
}

std::vector<double> fuse(std::span<const double> p1, std::span<const double> p2, double w) {
  check_lengths(p1.size(), p2.size());
  if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("fusion weight must lie in [0, 1]");
  std::vector<double> out(p1.size());
  if (w == 1.0) {
    std::copy(p1.begin(), p1.end(), out.begin());
  } else if (w == 0.0) {
    std::copy(p2.begin(), p2.end(), out.begin());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = w * p1[i] + (1.0 - w) * p2[i];
  }
  return out;
}

FusionWeight optimize_weight(std::span<const double> p1_val, std::span<const double> p2_val,
                             std::span<const int> y_val, double grid_step) {
  check_lengths(p1_val.size(), p2_val.size());
  if (!(grid_step > 0.0 && grid_step <= 0.5)) throw ConfigError("fusion grid step must lie in (0, 0.5]");
  std::vector<double> grid;
  const auto steps = static_cast<std::size_t>(std::floor(1.0 / grid_step + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) grid.push_back(std::min(1.0, static_cast<double>(k) * grid_step));
  if (grid.back() < 1.0) grid.push_back(1.0);
  FusionWeight best;
  best.val_auc = -1.0;
  for (double w : grid) {
    const double auc = auc_roc(fuse(p1_val, p2_val, w), y_val);
    best.trace.emplace_back(w, auc);
    // Float noise in the fused values can nudge AUC by ~1e-16; only clear wins move w.
    if (auc > best.val_auc + 1e-12) {
      best.w = w;
      best.val_auc = auc;
    }
  }
  return best;
}

}  // namespace ctdr
