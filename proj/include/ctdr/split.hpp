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

#include <string>
#include <string_view>
#include <vector>

#include "ctdr/dataset.hpp"

namespace ctdr {

enum class Partition { kTrain = 0, kVal = 1, kTest = 2 };

std::string_view partition_name(Partition p);  // "train", "val", "test"
Partition partition_from_name(std::string_view name);

enum class OrderingKey { kCompletionDate, kStartDate };

struct SplitFractions {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
};

struct SplitAssignment {
  SplitFractions fractions;
  OrderingKey ordering = OrderingKey::kCompletionDate;
  /// (nct_id, partition) in split order: train block, then val, then test.
  std::vector<std::pair<std::string, Partition>> rows;

  std::vector<std::string> ids(Partition p) const;
  std::size_t count(Partition p) const;
  /// Throws EmptyInput when the id is not assigned.
  Partition partition_of(std::string_view nct_id) const;

  bool operator==(const SplitAssignment& other) const { return rows == other.rows; }
};

/// Sorts by (completion date, nct_id) and cuts contiguous blocks of
/// floor(train*n), floor(val*n) and the remainder. Throws EmptyDataset, or
/// ConstraintViolation if a trial lacks a completion date.
SplitAssignment chronological_split(const Dataset& dataset, const SplitFractions& fractions = {});

/// Same mechanics ordered by (start date, nct_id); the biased baseline.
/// Throws MissingStartDate.
SplitAssignment initiation_split(const Dataset& dataset, const SplitFractions& fractions = {});

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|. Throws
/// InsufficientSamples for an empty sample.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct ShiftDiagnostic {
  std::string feature;
  double train_val = 0.0;
  double train_test = 0.0;
  double val_test = 0.0;
};

/// KS statistics of a numeric feature (enrollmentCount, numArms,
/// numInterventions, numLocations) between each pair of partitions, over
/// non-missing values. Throws InsufficientSamples when a partition has fewer
/// than two values, UnknownCategory for a non-numeric feature name.
ShiftDiagnostic shift_diagnostic(const SplitAssignment& split, const Dataset& dataset,
                                 std::string_view feature);

std::string split_to_string(const SplitAssignment& split);
SplitAssignment split_from_string(const std::string& text);

}  // namespace ctdr
