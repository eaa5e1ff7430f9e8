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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctdr/common.hpp"
#include "ctdr/encoding.hpp"
#include "ctdr/study.hpp"

namespace ctdr {

/// Pre-initiation predictive features of one trial. std::nullopt is the
/// missing marker throughout.
struct FeatureRow {
  std::string nct_id;

  std::optional<PrimaryPurpose> primary_purpose;
  std::optional<Masking> masking;
  std::optional<Sex> sex;
  std::optional<std::vector<Phase>> phases;
  std::optional<std::vector<ArmGroupType>> arm_group_types;
  std::optional<std::vector<InterventionType>> intervention_types;

  std::optional<bool> healthy_volunteers;
  std::optional<bool> oversight_has_dmc;

  std::optional<std::int64_t> enrollment_count;
  std::optional<std::int64_t> num_arms;
  std::optional<std::int64_t> num_interventions;
  std::optional<std::int64_t> num_locations;

  std::optional<std::string> allocation;
  std::optional<std::string> intervention_model;
  std::optional<std::string> brief_summary;
  std::optional<std::string> detailed_description;
  std::optional<std::string> conditions;
  std::optional<std::string> conditions_keywords;
  std::optional<std::string> arm_descriptions;
  std::optional<std::string> intervention_names;
  std::optional<std::string> intervention_descriptions;
  std::optional<std::string> location_details;

  bool operator==(const FeatureRow&) const = default;
};

/// The ten free-text feature names in their fixed order.
inline constexpr std::array<std::string_view, 10> kTextFieldNames = {
    "allocation",   "interventionModel", "briefSummary",      "detailedDescription",
    "conditions",   "conditionsKeywords", "armDescriptions",   "interventionNames",
    "interventionDescriptions", "locationDetails",
};

/// Text fields of a row in kTextFieldNames order.
std::array<const std::optional<std::string>*, 10> text_fields(const FeatureRow& row);

/// Pass-through metadata plus the label columns filled in by labeling.
struct AuxiliaryRow {
  std::string nct_id;
  OverallStatus overall_status = OverallStatus::kUnknown;
  std::optional<SponsorClass> lead_sponsor_class;
  std::optional<std::string> lead_sponsor_name;
  bool has_protocol = false;
  bool has_sap = false;
  bool has_icf = false;
  std::optional<Date> start_date;
  std::optional<Date> completion_date;
  std::vector<std::string> protocol_pdf_links;

  // Labeling outputs; absent until the dataset is labeled.
  std::map<std::string, std::int64_t> dosing_term_counts;  // canonical id -> affected count
  std::optional<double> wilson_lower_bound;
  std::optional<std::int64_t> ct_level_ade_population;
  std::optional<std::int64_t> sum_dosing_errors;
  std::optional<double> dosing_error_rate;
  std::optional<bool> label;

  bool operator==(const AuxiliaryRow&) const = default;
};

struct DatasetEntry {
  FeatureRow features;
  AuxiliaryRow aux;
  StudyRecord study;

  const std::string& nct_id() const { return study.nct_id; }
  bool operator==(const DatasetEntry&) const = default;
};

/// Trials ordered by nct_id ascending.
struct Dataset {
  std::vector<DatasetEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  bool operator==(const Dataset&) const = default;
};

FeatureRow extract_features(const StudyRecord& record);
AuxiliaryRow extract_auxiliary(const StudyRecord& record);

struct Rejection {
  std::string source;  // "path" or "path:line"
  std::string error;
};

struct IngestLog {
  std::size_t parsed = 0;
  std::size_t excluded = 0;
  std::vector<Rejection> rejected;
  std::vector<std::string> warnings;
};

struct IngestResult {
  Dataset dataset;
  IngestLog log;
};

/// Reads every study document under \p paths (files, or directories scanned
/// for *.json / *.jsonl / *.ndjson), keeps the ones passing inclusion and
/// returns them sorted by nct_id. Per-document failures are logged as
/// rejections and never abort the corpus. Throws IoError for unreadable paths.
IngestResult ingest_corpus(const std::vector<std::string>& paths, const Date& cutoff);

/// The document files ingest_corpus would read, in reading order.
std::vector<std::string> expand_input_paths(const std::vector<std::string>& paths);

inline constexpr int kDatasetSchemaVersion = 1;

/// Newline-delimited dataset file: a schema header line, then one JSON
/// object per trial.
std::string dataset_to_string(const Dataset& dataset);
Dataset dataset_from_string(const std::string& text);

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace ctdr
