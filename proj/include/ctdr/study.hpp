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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctdr/common.hpp"
#include "ctdr/encoding.hpp"

namespace ctdr {

struct DesignInfo {
  std::optional<PrimaryPurpose> primary_purpose;
  std::optional<Masking> masking;
  std::optional<std::string> allocation;
  std::optional<std::string> intervention_model;
  std::vector<Phase> phases;  // sorted, unique; empty when not reported
  std::optional<bool> oversight_has_dmc;
  std::optional<std::int64_t> enrollment_count;

  bool operator==(const DesignInfo&) const = default;
};

struct ArmGroup {
  std::string label;
  std::optional<ArmGroupType> group_type;
  std::optional<std::string> description;

  bool operator==(const ArmGroup&) const = default;
};

struct InterventionInfo {
  std::optional<InterventionType> type;
  std::string name;
  std::optional<std::string> description;

  bool operator==(const InterventionInfo&) const = default;
};

struct EligibilityInfo {
  std::optional<Sex> sex;
  std::optional<bool> healthy_volunteers;

  bool operator==(const EligibilityInfo&) const = default;
};

struct Location {
  std::optional<std::string> facility;
  std::optional<std::string> city;
  std::optional<std::string> state;
  std::optional<std::string> country;

  bool operator==(const Location&) const = default;
};

/// Arm-level block of the adverse-event results ("event group").
struct AdverseEventGroup {
  std::string id;
  std::string title;
  std::optional<std::int64_t> serious_num_at_risk;
  std::optional<std::int64_t> other_num_at_risk;

  bool operator==(const AdverseEventGroup&) const = default;
};

/// One (event term, arm) cell of the serious or other adverse-event tables.
struct AdverseEventEntry {
  std::string arm_group_id;
  std::string event_term;
  bool serious = false;
  std::int64_t num_affected = 0;
  std::int64_t num_at_risk = 0;  // 0 when not reported
  std::optional<std::int64_t> num_events;

  bool operator==(const AdverseEventEntry&) const = default;
};

struct StudyRecord {
  std::string nct_id;
  OverallStatus overall_status = OverallStatus::kUnknown;
  StudyType study_type = StudyType::kInterventional;
  bool has_results = false;
  std::optional<Date> start_date;
  std::optional<Date> completion_date;
  std::optional<Date> first_submit_date;

  std::optional<std::string> brief_summary;
  std::optional<std::string> detailed_description;
  std::vector<std::string> conditions;
  std::vector<std::string> keywords;

  DesignInfo design;
  std::vector<ArmGroup> arms;
  std::vector<InterventionInfo> interventions;
  EligibilityInfo eligibility;
  std::vector<Location> locations;

  std::vector<AdverseEventGroup> event_groups;
  std::vector<AdverseEventEntry> adverse_events;

  std::optional<std::string> lead_sponsor_name;
  std::optional<SponsorClass> sponsor_class;
  bool has_protocol = false;
  bool has_sap = false;
  bool has_icf = false;
  std::vector<std::string> large_doc_filenames;

  std::size_t locations_count() const { return locations.size(); }
  /// Locations rendered one per line; nullopt when none are listed.
  std::optional<std::string> location_text() const;
  /// Public download links of the attached large documents.
  std::vector<std::string> protocol_pdf_links() const;

  bool operator==(const StudyRecord&) const = default;
};

/// Parses one study document in the registry's v2 JSON structure.
///
/// Unknown fields are ignored. Values of closed enums outside their value set
/// raise InvalidEnumValue. Unparseable dates are dropped and reported through
/// \p warnings. Structural problems raise MalformedDocument and broken
/// invariants raise ConstraintViolation.
StudyRecord parse_study(std::string_view document_text,
                        std::vector<std::string>* warnings = nullptr);

/// Renders a record back into the v2 structure. parse_study(serialize_study(r))
/// reproduces r.
std::string serialize_study(const StudyRecord& record);

/// The five selection criteria: completed or terminated, interventional,
/// results posted, completion date reported, first submitted before cutoff.
bool passes_inclusion(const StudyRecord& record, const Date& cutoff);

/// True when the id is "NCT" followed by eight digits.
bool is_valid_nct_id(std::string_view id);

}  // namespace ctdr
