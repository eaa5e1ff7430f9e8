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

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctdr/features.hpp"

namespace ctdr {

struct TrainConfig {
  int n_estimators = 100;
  int max_depth = 6;
  double learning_rate = 0.3;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  double max_delta_step = 0.0;
  double reg_alpha = 0.0;
  double reg_lambda = 1.0;
  double scale_pos_weight = 1.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first out-of-domain field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  double weight = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Flat node array, root at index 0. Rows with x < threshold go left.
struct Tree {
  std::vector<TreeNode> nodes;

  double leaf_value(std::span<const double> row) const;
  bool operator==(const Tree&) const = default;
};

struct Ensemble {
  double base_score = 0.0;  // log-odds
  double learning_rate = 1.0;
  std::vector<std::string> feature_names;
  std::vector<Tree> trees;
  TrainConfig config;

  double margin(std::span<const double> row) const;
  bool operator==(const Ensemble&) const = default;
};

/// Elastic soft-thresholding of a gradient sum.
double soft_threshold(double g, double alpha);

/// Optimal leaf weight -T(G) / (H + lambda), clipped to max_delta_step when
/// that is positive.
double leaf_weight(double g, double h, const TrainConfig& cfg);

/// Second-order logistic boosting with exact greedy splits. Row subsampling
/// is keyed by row id and column sampling by column name, so the model does
/// not depend on row or column order. Throws DegenerateLabels or
/// DimensionMismatch.
Ensemble train_gbdt(const TabularMatrix& x, std::span<const int> y, const TrainConfig& cfg);

/// Throws DimensionMismatch when the columns differ from training.
std::vector<double> predict_proba(const Ensemble& model, const TabularMatrix& x);

std::string ensemble_to_json(const Ensemble& model);
Ensemble ensemble_from_json(const std::string& text);

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
};

/// Sampling ranges. scale_pos_weight is expressed as a multiple of the
/// training negative/positive ratio.
struct SearchSpace {
  IntRange n_estimators{100, 1000};
  IntRange max_depth{3, 12};
  RealRange learning_rate{1e-3, 0.3, true};
  RealRange subsample{0.5, 1.0};
  RealRange colsample_bytree{0.5, 1.0};
  RealRange gamma{0.0, 5.0};
  RealRange min_child_weight{1.0, 10.0};
  RealRange max_delta_step{0.0, 10.0};
  RealRange reg_alpha{1e-8, 10.0, true};
  RealRange reg_lambda{1e-8, 10.0, true};
  RealRange scale_pos_weight_factor{0.5, 2.0};

  /// Every range collapsed onto \p cfg; scale_pos_weight becomes a factor of 1.
  static SearchSpace point(const TrainConfig& cfg);
};

struct SearchTrial {
  int index = 0;
  TrainConfig config;
  std::optional<double> val_auc;
  std::string error;
};

struct SearchResult {
  TrainConfig best;
  double best_auc = 0.0;
  std::vector<SearchTrial> trace;
};

/// Draws \p trials configurations and keeps the one with the highest
/// validation AUC (earliest on ties). Failed trials stay in the trace.
SearchResult random_search(const SearchSpace& space, int trials, std::uint64_t seed,
                           const TabularMatrix& x_train, std::span<const int> y_train,
                           const TabularMatrix& x_val, std::span<const int> y_val);

std::string search_trace_to_tsv(const SearchResult& result);

}  // namespace ctdr
