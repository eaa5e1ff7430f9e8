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

#include "ctdr/stratify.hpp"

#include <algorithm>
#include <cstdio>

#include "ctdr/common.hpp"
#include "ctdr/errors.hpp"

namespace ctdr {

namespace {

constexpr std::array<std::string_view, 4> kStageNames = {"Early", "Mid", "Late", "Unstaged"};
constexpr std::array<std::string_view, 4> kEnrollmentNames = {"<=50", "51-200", "201-500", ">500"};

StratTable build_table(std::span<const double> p, std::span<const int> y, std::span<const std::size_t> members,
                       const RiskBoundaries& b, std::string subgroup) {
  StratTable t;
  t.subgroup = std::move(subgroup);
  std::array<std::size_t, 4> n{}, e{};
  for (std::size_t i : members) {
    const auto g = static_cast<std::size_t>(assign_risk_group(p[i], b));
    ++n[g];
    if (y[i] != 0) ++e[g];
  }
  for (std::size_t g = 0; g < 4; ++g) {
    t.n_trials += n[g];
    t.n_events += e[g];
  }
  t.baseline_rate = static_cast<double>(t.n_events) / static_cast<double>(t.n_trials);
  for (std::size_t g = 0; g < 4; ++g) {
    StratRow row;
    row.group = kRiskGroups[g];
    row.n_trials = n[g];
    row.n_events = e[g];
    row.empty_group = n[g] == 0;
    row.zero_baseline = t.n_events == 0;
    row.event_rate = row.empty_group ? 0.0 : static_cast<double>(e[g]) / static_cast<double>(n[g]);
    row.relative_risk = row.zero_baseline ? 0.0 : row.event_rate / t.baseline_rate;
    t.rows.push_back(row);
  }
  return t;
}

void check_inputs(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size()) throw LengthMismatch("probabilities and labels differ in length");
  if (p.empty()) throw EmptyInput("nothing to stratify");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string_view risk_group_name(RiskGroup g) {
  static constexpr std::array<std::string_view, 4> kNames = {"Low", "Moderate", "High", "Very high"};
  return kNames[static_cast<std::size_t>(g)];
}

void validate_boundaries(const RiskBoundaries& b) {
  if (!(b[0] > 0.0 && b[0] < b[1] && b[1] < b[2] && b[2] < 1.0)) {
    throw ConfigError("risk boundaries must increase strictly within (0, 1)");
  }
}

RiskGroup assign_risk_group(double p, const RiskBoundaries& b) {
  if (p < b[0]) return RiskGroup::kLow;
  if (p < b[1]) return RiskGroup::kModerate;
  if (p < b[2]) return RiskGroup::kHigh;
  return RiskGroup::kVeryHigh;
}

StratTable stratification_table(std::span<const double> p, std::span<const int> y, const RiskBoundaries& b) {
  check_inputs(p, y);
  std::vector<std::size_t> all(p.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return build_table(p, y, all, b, "");
}

std::string_view stage_name(StageCategory s) { return kStageNames[static_cast<std::size_t>(s)]; }

StageCategory stage_of(std::span<const Phase> phases) {
  Phase top = Phase::kNa;
  for (Phase ph : phases) top = std::max(top, ph);
  switch (top) {
    case Phase::kEarlyPhase1:
    case Phase::kPhase1:
      return StageCategory::kEarly;
    case Phase::kPhase2:
      return StageCategory::kMid;
    case Phase::kPhase3:
    case Phase::kPhase4:
      return StageCategory::kLate;
    case Phase::kNa:
      break;
  }
  return StageCategory::kUnstaged;
}

std::string_view enrollment_bin_name(EnrollmentBin b) { return kEnrollmentNames[static_cast<std::size_t>(b)]; }

EnrollmentBin enrollment_bin(std::int64_t count) {
  if (count <= 50) return EnrollmentBin::kUpTo50;
  if (count <= 200) return EnrollmentBin::k51To200;
  if (count <= 500) return EnrollmentBin::k201To500;
  return EnrollmentBin::kOver500;
}

std::string_view subgroup_key_name(SubgroupKey k) { return k == SubgroupKey::kStage ? "stage" : "enrollment"; }

SubgroupKey subgroup_key_from_name(std::string_view name) {
  if (name == "stage") return SubgroupKey::kStage;
  if (name == "enrollment") return SubgroupKey::kEnrollment;
  throw ConfigError("unknown subgroup key: " + std::string(name));
}

std::optional<std::string> subgroup_of(const FeatureRow& row, SubgroupKey key) {
  if (key == SubgroupKey::kStage) {
    if (!row.phases) return std::nullopt;
    const StageCategory s = stage_of(*row.phases);
    if (s == StageCategory::kUnstaged) return std::nullopt;
    return std::string(stage_name(s));
  }
  if (!row.enrollment_count || *row.enrollment_count < 0) return std::nullopt;
  return std::string(enrollment_bin_name(enrollment_bin(*row.enrollment_count)));
}

SubgroupTables subgroup_tables(std::span<const double> p, std::span<const int> y, std::span<const FeatureRow> rows,
                               SubgroupKey key, const RiskBoundaries& b) {
  check_inputs(p, y);
  if (rows.size() != p.size()) throw LengthMismatch("feature rows do not match probabilities");
  const auto& names = key == SubgroupKey::kStage ? kStageNames : kEnrollmentNames;
  const std::size_t n_groups = key == SubgroupKey::kStage ? 3 : 4;
  std::vector<std::vector<std::size_t>> members(n_groups);
  SubgroupTables out;
  out.key = key;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto sub = subgroup_of(rows[i], key);
    if (!sub) {
      ++out.excluded;
      continue;
    }
    const auto it = std::find(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n_groups), *sub);
    members[static_cast<std::size_t>(it - names.begin())].push_back(i);
  }
  for (std::size_t g = 0; g < n_groups; ++g) {
    if (!members[g].empty()) out.tables.push_back(build_table(p, y, members[g], b, std::string(names[g])));
  }
  return out;
}

std::string strat_tables_to_tsv(std::span<const StratTable> tables) {
  std::string out = "subgroup\trisk_group\tn_trials\tn_events\tevent_rate\trelative_risk\tflags\n";
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      std::string flags;
      if (r.empty_group) flags += "empty_group";
      if (r.zero_baseline) flags += std::string(flags.empty() ? "" : ",") + "zero_baseline";
      out += (t.subgroup.empty() ? "all" : t.subgroup) + '\t' + std::string(risk_group_name(r.group)) + '\t' +
             std::to_string(r.n_trials) + '\t' + std::to_string(r.n_events) + '\t' + format_double(r.event_rate) +
             '\t' + format_double(r.relative_risk) + '\t' + (flags.empty() ? "-" : flags) + '\n';
    }
  }
  return out;
}

std::string render_strat_tables(std::string_view title, std::span<const StratTable> tables, std::size_t excluded,
                                std::string_view excluded_label) {
  std::string out(title);
  out += '\n';
  char line[160];
  for (const auto& t : tables) {
    if (!t.subgroup.empty()) out += "\n[" + t.subgroup + "]\n";
    std::snprintf(line, sizeof line, "%-12s %10s %10s %16s %14s\n", "Risk group", "CTs", "Events", "Event rate (%)",
                  "Relative risk");
    out += line;
    for (const auto& r : t.rows) {
      std::snprintf(line, sizeof line, "%-12s %10zu %10zu %16s %14s\n", std::string(risk_group_name(r.group)).c_str(),
                    r.n_trials, r.n_events, fixed(100.0 * r.event_rate, 2).c_str(),
                    fixed(r.relative_risk, 3).c_str());
      out += line;
    }
    std::snprintf(line, sizeof line, "baseline: %zu/%zu = %s%%\n", t.n_events, t.n_trials,
                  fixed(100.0 * t.baseline_rate, 2).c_str());
    out += line;
  }
  if (excluded > 0) {
    out += "\nexcluded (" + std::string(excluded_label) + "): " + std::to_string(excluded) + "\n";
  }
  return out;
}

}  // namespace ctdr
