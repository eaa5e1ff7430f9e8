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
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctdr/calibration.hpp"
#include "ctdr/common.hpp"
#include "ctdr/features.hpp"
#include "ctdr/linear.hpp"
#include "ctdr/split.hpp"
#include "ctdr/stratify.hpp"

namespace ctdr {

struct PipelineConfig {
  std::vector<std::string> input_paths;
  Date cutoff = Date{std::chrono::year{2025}, std::chrono::month{9}, std::chrono::day{1}};

  std::string term_list;
  double min_similarity = 0.90;
  double wilson_confidence = 0.95;
  double wilson_threshold = 0.0001;

  SplitFractions fractions;
  TextVectorizerConfig text_features;

  int search_trials = 200;
  std::uint64_t seed = 42;

  LinearConfig text_model;  // class_weight_pos is derived from the training split

  CalibrationMethod calibration_tabular = CalibrationMethod::kIsotonic;
  CalibrationMethod calibration_text = CalibrationMethod::kPlatt;
  CalibrationMethod calibration_fusion = CalibrationMethod::kPlatt;
  double fusion_grid_step = 0.001;

  RiskBoundaries boundaries = kDefaultBoundaries;

  std::string output_dir = "ctdr-out";
};

/// Every config key in display order.
const std::vector<std::string>& config_keys();

/// Current value of \p key rendered as config text. Throws ConfigError.
std::string get_config_value(const PipelineConfig& cfg, const std::string& key);

/// Parses and assigns one key. Throws ConfigError for unknown keys or bad
/// values.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// "key = value" lines, one per key.
std::string config_to_string(const PipelineConfig& cfg);

/// Applies "key = value" lines on top of \p base. Blank lines and lines
/// starting with '#' are skipped.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});

/// Environment variable of a key: CTDR_ + upper case with dots as
/// underscores, e.g. CTDR_LABELS_WILSON_THRESHOLD.
std::string env_var_name(const std::string& key);

/// Applies every set override; \p getenv defaults to the process environment.
void apply_env_overrides(PipelineConfig& cfg,
                         const std::function<std::optional<std::string>(const std::string&)>& getenv = {});

/// Throws ConfigError on cross-field problems.
void validate_config(const PipelineConfig& cfg);

}  // namespace ctdr
