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

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ctdr {

/// Binary labels, 0 or 1.
using Labels = std::vector<int>;

/// Mann-Whitney AUC with ties counted one half, via average ranks.
/// Throws SingleClass or LengthMismatch.
double auc_roc(std::span<const double> p, std::span<const int> y);

/// Mean squared error against the labels.
double brier(std::span<const double> p, std::span<const int> y);

/// Mean negative log-likelihood with p clamped to [1e-15, 1 - 1e-15].
double log_loss(std::span<const double> p, std::span<const int> y);

struct MetricsReport {
  std::string variant;
  std::string split;
  double auc = 0.0;
  double brier = 0.0;
  double f1 = 0.0;
  double f1_macro = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double balanced_accuracy = 0.0;
  double accuracy = 0.0;
  double threshold = 0.0;
};

/// Threshold-dependent metrics under the rule p >= t. Undefined precision or
/// recall count as 0; a class F1 is 0 when its precision + recall is 0.
MetricsReport confusion_metrics(std::span<const double> p, std::span<const int> y, double t);

/// Every metric: confusion metrics at \p t plus AUC and Brier.
MetricsReport evaluate_metrics(std::span<const double> p, std::span<const int> y, double t,
                               std::string variant, std::string split);

struct ThresholdChoice {
  double threshold = 0.0;
  double f1 = 0.0;
};

/// F1-maximizing threshold over the distinct values of \p p (rule p >= t);
/// ties go to the smallest threshold. Throws SingleClass.
ThresholdChoice select_threshold_max_f1(std::span<const double> p, std::span<const int> y);

/// Elementwise w * p1 + (1 - w) * p2. Throws LengthMismatch.
std::vector<double> fuse(std::span<const double> p1, std::span<const double> p2, double w);

struct FusionWeight {
  double w = 0.0;
  double val_auc = 0.0;
  std::vector<std::pair<double, double>> trace;  // (w, validation AUC)
};

/// Grid search of the fusion weight over {0, step, 2 step, ...} plus 1,
/// maximizing validation AUC; ties go to the smallest w.
FusionWeight optimize_weight(std::span<const double> p1_val, std::span<const double> p2_val,
                             std::span<const int> y_val, double grid_step);

}  // namespace ctdr
