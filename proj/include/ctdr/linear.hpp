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

#include "ctdr/features.hpp"

namespace ctdr {

struct LinearConfig {
  double l2 = 1e-4;
  double class_weight_pos = 1.0;
  int max_iters = 200;
  double tol = 1e-6;
  int history = 10;  // L-BFGS memory

  bool operator==(const LinearConfig&) const = default;
};

struct LinearModel {
  std::size_t dim = 0;
  std::vector<double> weights;
  double intercept = 0.0;
  LinearConfig config;

  bool operator==(const LinearModel&) const = default;
};

/// Objective value with its gradient. The intercept's gradient is last.
struct ObjectiveValue {
  double loss = 0.0;
  std::vector<double> grad;
};

/// (1/n) sum c_i * logloss_i + (l2/2) |w|^2 with c_i = class_weight_pos for
/// positives and 1 otherwise; \p params holds w then the intercept.
ObjectiveValue logistic_objective(const TextMatrix& x, std::span<const int> y, std::span<const double> params,
                                  double l2, double class_weight_pos);

struct LinearTrace {
  std::vector<double> losses;  // objective after each accepted iteration, starting at w = 0
  int iterations = 0;
  bool converged = false;
};

/// L-BFGS with backtracking (step halving). Converged when the gradient norm
/// drops below tol. Throws DegenerateLabels or DimensionMismatch.
LinearModel train_linear(const TextMatrix& x, std::span<const int> y, const LinearConfig& cfg,
                         LinearTrace* trace = nullptr);

/// Throws DimensionMismatch.
std::vector<double> predict_proba(const LinearModel& model, const TextMatrix& x);

std::string linear_model_to_string(const LinearModel& model);
LinearModel linear_model_from_string(const std::string& text);

}  // namespace ctdr
