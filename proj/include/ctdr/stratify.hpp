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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctdr/dataset.hpp"

namespace ctdr {

enum class RiskGroup : int { kLow = 0, kModerate, kHigh, kVeryHigh };

inline constexpr std::array<RiskGroup, 4> kRiskGroups = {RiskGroup::kLow, RiskGroup::kModerate, RiskGroup::kHigh,
                                                         RiskGroup::kVeryHigh};

std::string_view risk_group_name(RiskGroup g);

/// Interior boundaries; each belongs to the group above it.
using RiskBoundaries = std::array<double, 3>;
inline constexpr RiskBoundaries kDefaultBoundaries = {0.02, 0.05, 0.10};

/// Throws ConfigError unless strictly increasing within (0, 1).
void validate_boundaries(const RiskBoundaries& b);

RiskGroup assign_risk_group(double p, const RiskBoundaries& b = kDefaultBoundaries);

struct StratRow {
  RiskGroup group = RiskGroup::kLow;
  std::size_t n_trials = 0;
  std::size_t n_events = 0;
  double event_rate = 0.0;
  double relative_risk = 0.0;
  bool empty_group = false;
  bool zero_baseline = false;
};

struct StratTable {
  std::string subgroup;  // empty for the whole input
  std::size_t n_trials = 0;
  std::size_t n_events = 0;
  double baseline_rate = 0.0;
  std::vector<StratRow> rows;  // one per risk group, in order
};

/// Per-group counts with relative risk against the input's own unrounded
/// prevalence. Throws EmptyInput or LengthMismatch.
StratTable stratification_table(std::span<const double> p, std::span<const int> y,
                                const RiskBoundaries& b = kDefaultBoundaries);

enum class StageCategory : int { kEarly = 0, kMid, kLate, kUnstaged };

std::string_view stage_name(StageCategory s);

/// Highest reported phase governs; no phase other than NA means unstaged.
StageCategory stage_of(std::span<const Phase> phases);

enum class EnrollmentBin : int { kUpTo50 = 0, k51To200, k201To500, kOver500 };

std::string_view enrollment_bin_name(EnrollmentBin b);
EnrollmentBin enrollment_bin(std::int64_t count);

enum class SubgroupKey { kStage, kEnrollment };

std::string_view subgroup_key_name(SubgroupKey k);
SubgroupKey subgroup_key_from_name(std::string_view name);

struct SubgroupTables {
  SubgroupKey key = SubgroupKey::kStage;
  std::vector<StratTable> tables;  // populated subgroups in category order
  std::size_t excluded = 0;        // rows without a subgroup value
};

/// Subgroup label of a row, or nullopt when it belongs to none (unstaged or
/// unknown enrollment).
std::optional<std::string> subgroup_of(const FeatureRow& row, SubgroupKey key);

/// One table per subgroup, each against that subgroup's own prevalence.
/// Throws EmptyInput or LengthMismatch.
SubgroupTables subgroup_tables(std::span<const double> p, std::span<const int> y, std::span<const FeatureRow> rows,
                               SubgroupKey key, const RiskBoundaries& b = kDefaultBoundaries);

/// Delimited rendering: one line per (subgroup, group).
std::string strat_tables_to_tsv(std::span<const StratTable> tables);

/// Aligned rendering with rates in percent and a footer for excluded rows.
std::string render_strat_tables(std::string_view title, std::span<const StratTable> tables, std::size_t excluded = 0,
                                std::string_view excluded_label = {});

}  // namespace ctdr
