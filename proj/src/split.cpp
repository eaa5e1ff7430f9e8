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

#include "ctdr/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ctdr/errors.hpp"

namespace ctdr {

namespace {

void validate(const SplitFractions& f) {
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be non-negative and sum to 1");
  }
}

// floor(f * n), robust to products like 0.7 * 10 landing a hair under 7.
std::size_t floor_share(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

struct Keyed {
  std::int64_t day;
  const std::string* id;
};

SplitAssignment cut(std::vector<Keyed> keyed, const SplitFractions& fractions, OrderingKey ordering) {
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return a.day != b.day ? a.day < b.day : *a.id < *b.id;
  });
  const std::size_t n = keyed.size();
  const std::size_t n_train = floor_share(fractions.train, n);
  const std::size_t n_val = std::min(n - n_train, floor_share(fractions.val, n));
  SplitAssignment split;
  split.fractions = fractions;
  split.ordering = ordering;
  split.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Partition p = i < n_train ? Partition::kTrain : i < n_train + n_val ? Partition::kVal : Partition::kTest;
    split.rows.emplace_back(*keyed[i].id, p);
  }
  return split;
}

std::optional<double> numeric_feature(const FeatureRow& row, std::string_view feature) {
  const std::optional<std::int64_t>* v = nullptr;
  if (feature == "enrollmentCount") v = &row.enrollment_count;
  else if (feature == "numArms") v = &row.num_arms;
  else if (feature == "numInterventions") v = &row.num_interventions;
  else if (feature == "numLocations") v = &row.num_locations;
  else throw UnknownCategory("'" + std::string(feature) + "' is not a numeric feature");
  if (!*v) return std::nullopt;
  return static_cast<double>(**v);
}

}  // namespace

std::string_view partition_name(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kVal: return "val";
    case Partition::kTest: return "test";
  }
  return {};
}

Partition partition_from_name(std::string_view name) {
  for (auto p : {Partition::kTrain, Partition::kVal, Partition::kTest}) {
    if (partition_name(p) == name) return p;
  }
  throw UnknownCategory("partition '" + std::string(name) + "'");
}

std::vector<std::string> SplitAssignment::ids(Partition p) const {
  std::vector<std::string> out;
  for (const auto& [id, part] : rows) {
    if (part == p) out.push_back(id);
  }
  return out;
}

std::size_t SplitAssignment::count(Partition p) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [p](const auto& r) { return r.second == p; }));
}

Partition SplitAssignment::partition_of(std::string_view nct_id) const {
  for (const auto& [id, part] : rows) {
    if (id == nct_id) return part;
  }
  throw EmptyInput("trial " + std::string(nct_id) + " is not in the split");
}

SplitAssignment chronological_split(const Dataset& dataset, const SplitFractions& fractions) {
  validate(fractions);
  if (dataset.empty()) throw EmptyDataset("nothing to split");
  std::vector<Keyed> keyed;
  keyed.reserve(dataset.size());
  for (const auto& e : dataset.entries) {
    if (!e.aux.completion_date) throw ConstraintViolation(e.nct_id() + " has no completion date");
    keyed.push_back({day_number(*e.aux.completion_date), &e.nct_id()});
  }
  return cut(std::move(keyed), fractions, OrderingKey::kCompletionDate);
}

SplitAssignment initiation_split(const Dataset& dataset, const SplitFractions& fractions) {
  validate(fractions);
  if (dataset.empty()) throw EmptyDataset("nothing to split");
  std::vector<Keyed> keyed;
  keyed.reserve(dataset.size());
  for (const auto& e : dataset.entries) {
    if (!e.aux.start_date) throw MissingStartDate(e.nct_id() + " has no start date");
    keyed.push_back({day_number(*e.aux.start_date), &e.nct_id()});
  }
  return cut(std::move(keyed), fractions, OrderingKey::kStartDate);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InsufficientSamples("KS needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

ShiftDiagnostic shift_diagnostic(const SplitAssignment& split, const Dataset& dataset,
                                 std::string_view feature) {
  std::map<std::string_view, const FeatureRow*> rows;
  for (const auto& e : dataset.entries) rows.emplace(e.nct_id(), &e.features);
  std::vector<double> values[3];
  for (const auto& [id, part] : split.rows) {
    const auto it = rows.find(id);
    if (it == rows.end()) throw EmptyInput("split references unknown trial " + id);
    if (auto v = numeric_feature(*it->second, feature)) values[static_cast<int>(part)].push_back(*v);
  }
  for (auto p : {Partition::kTrain, Partition::kVal, Partition::kTest}) {
    if (values[static_cast<int>(p)].size() < 2) {
      throw InsufficientSamples(std::string(partition_name(p)) + " has fewer than 2 values of " +
                                std::string(feature));
    }
  }
  return {std::string(feature), ks_statistic(values[0], values[1]), ks_statistic(values[0], values[2]),
          ks_statistic(values[1], values[2])};
}

std::string split_to_string(const SplitAssignment& split) {
  std::ostringstream out;
  out << "# ctdr-split v1 fractions=" << format_double(split.fractions.train) << ','
      << format_double(split.fractions.val) << ',' << format_double(split.fractions.test)
      << " ordering=" << (split.ordering == OrderingKey::kCompletionDate ? "completion_date" : "start_date")
      << '\n';
  out << "nct_id\tpartition\n";
  for (const auto& [id, part] : split.rows) out << id << '\t' << partition_name(part) << '\n';
  return out.str();
}

SplitAssignment split_from_string(const std::string& text) {
  SplitAssignment split;
  const auto lines = split_string(text, '\n');
  if (lines.size() < 2 || lines[0].rfind("# ctdr-split v1 ", 0) != 0) {
    throw SchemaVersionMismatch("split file lacks 'ctdr-split v1' header");
  }
  for (const auto& tok : split_string(lines[0].substr(16), ' ')) {
    if (tok.rfind("fractions=", 0) == 0) {
      const auto parts = split_string(tok.substr(10), ',');
      if (parts.size() != 3) throw SchemaVersionMismatch("bad fractions in split header");
      split.fractions = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
    } else if (tok == "ordering=start_date") {
      split.ordering = OrderingKey::kStartDate;
    }
  }
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split_string(lines[i], '\t');
    if (cols.size() != 2) throw SchemaVersionMismatch("bad split row: " + lines[i]);
    split.rows.emplace_back(cols[0], partition_from_name(trim(cols[1])));
  }
  return split;
}

}  // namespace ctdr
