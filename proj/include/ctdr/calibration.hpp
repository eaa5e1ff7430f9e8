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
#include <vector>

namespace ctdr {

/// Calibrated p = 1 / (1 + exp(A s + B)) on s = logit(raw p).
struct PlattParams {
  double a = 0.0;
  double b = 0.0;

  bool operator==(const PlattParams&) const = default;
};

/// logit of \p p clamped to [1e-12, 1 - 1e-12].
double platt_score(double p);

/// Newton iteration with backtracking on smoothed targets. Scores are
/// logits. Throws DegenerateLabels, NonFinite or LengthMismatch.
PlattParams fit_platt(std::span<const double> scores, std::span<const int> labels, int max_iters = 100,
                      double tol = 1e-10);

std::vector<double> apply_platt(const PlattParams& params, std::span<const double> raw_probs);

/// One pooled block: scores in [lo, hi] map to value.
struct IsotonicBlock {
  double lo = 0.0;
  double hi = 0.0;
  double value = 0.0;
  double weight = 0.0;

  bool operator==(const IsotonicBlock&) const = default;
};

struct IsotonicMap {
  std::vector<IsotonicBlock> blocks;  // ascending, non-decreasing values

  /// Value of the last block starting at or below \p s; the first block
  /// below the fit range.
  double operator()(double s) const;
  bool operator==(const IsotonicMap&) const = default;
};

/// Weighted pool-adjacent-violators. Empty \p weights means unit weights.
/// Throws EmptyInput, NonFinite, LengthMismatch, or ConfigError for
/// non-positive weights.
IsotonicMap fit_isotonic(std::span<const double> scores, std::span<const double> targets,
                         std::span<const double> weights = {});

std::vector<double> apply_isotonic(const IsotonicMap& map, std::span<const double> raw_probs);

enum class CalibrationMethod { kPlatt, kIsotonic };

std::string_view calibration_method_name(CalibrationMethod m);
CalibrationMethod calibration_method_from_name(std::string_view name);

/// A fitted calibrator and the fingerprint of the split it was fitted on.
struct Calibration {
  CalibrationMethod method = CalibrationMethod::kPlatt;
  PlattParams platt;
  IsotonicMap isotonic;
  std::string fitted_on;

  bool operator==(const Calibration&) const = default;
};

Calibration fit_calibration(CalibrationMethod method, std::span<const double> raw_probs, std::span<const int> labels,
                            std::string fitted_on);
std::vector<double> apply_calibration(const Calibration& cal, std::span<const double> raw_probs);

std::string calibration_to_json(const Calibration& cal);
Calibration calibration_from_json(const std::string& text);

}  // namespace ctdr
