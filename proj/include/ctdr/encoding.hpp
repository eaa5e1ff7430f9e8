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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctdr {

// Closed value sets. Underlying values of the categorical feature enums are
// the published integer ids, so static_cast<int> is the encoding.

enum class Phase : int { kNa = 0, kEarlyPhase1, kPhase1, kPhase2, kPhase3, kPhase4 };

enum class PrimaryPurpose : int {
  kTreatment = 0,
  kPrevention,
  kDiagnostic,
  kEct,
  kSupportiveCare,
  kScreening,
  kHealthServicesResearch,
  kBasicScience,
  kDeviceFeasibility,
  kOther,
};

enum class Masking : int { kNone = 0, kSingle, kDouble, kTriple, kQuadruple };

enum class Sex : int { kAll = 0, kFemale, kMale };

enum class ArmGroupType : int {
  kExperimental = 0,
  kActiveComparator,
  kPlaceboComparator,
  kShamComparator,
  kNoIntervention,
  kOther,
};

enum class InterventionType : int {
  kDrug = 0,
  kDevice,
  kBiological,
  kProcedure,
  kRadiation,
  kBehavioral,
  kGenetic,
  kDietarySupplement,
  kCombinationProduct,
  kDiagnosticTest,
  kOther,
};

// Registry enums outside the feature set.

enum class OverallStatus : int {
  kActiveNotRecruiting = 0,
  kCompleted,
  kEnrollingByInvitation,
  kNotYetRecruiting,
  kRecruiting,
  kSuspended,
  kTerminated,
  kWithdrawn,
  kAvailable,
  kNoLongerAvailable,
  kTemporarilyNotAvailable,
  kApprovedForMarketing,
  kWithheld,
  kUnknown,
};

enum class StudyType : int { kInterventional = 0, kObservational, kExpandedAccess };

enum class SponsorClass : int {
  kNih = 0,
  kFed,
  kOtherGov,
  kIndiv,
  kIndustry,
  kNetwork,
  kAmbig,
  kOther,
  kUnknown,
};

template <typename E>
struct EnumTraits;

#define CTDR_ENUM_TRAITS(Enum, FieldName, ...)                                 \
  template <>                                                                \
  struct EnumTraits<Enum> {                                                  \
    static constexpr std::string_view field = FieldName;                     \
    static constexpr auto names = std::to_array<std::string_view>({__VA_ARGS__}); \
  }

CTDR_ENUM_TRAITS(Phase, "phases", "NA", "EARLY_PHASE1", "PHASE1", "PHASE2", "PHASE3", "PHASE4");
CTDR_ENUM_TRAITS(PrimaryPurpose, "primaryPurpose", "TREATMENT", "PREVENTION", "DIAGNOSTIC", "ECT",
                 "SUPPORTIVE_CARE", "SCREENING", "HEALTH_SERVICES_RESEARCH", "BASIC_SCIENCE",
                 "DEVICE_FEASIBILITY", "OTHER");
CTDR_ENUM_TRAITS(Masking, "masking", "NONE", "SINGLE", "DOUBLE", "TRIPLE", "QUADRUPLE");
CTDR_ENUM_TRAITS(Sex, "sex", "ALL", "FEMALE", "MALE");
CTDR_ENUM_TRAITS(ArmGroupType, "armGroupTypes", "EXPERIMENTAL", "ACTIVE_COMPARATOR",
                 "PLACEBO_COMPARATOR", "SHAM_COMPARATOR", "NO_INTERVENTION", "OTHER");
CTDR_ENUM_TRAITS(InterventionType, "interventionTypes", "DRUG", "DEVICE", "BIOLOGICAL",
                 "PROCEDURE", "RADIATION", "BEHAVIORAL", "GENETIC", "DIETARY_SUPPLEMENT",
                 "COMBINATION_PRODUCT", "DIAGNOSTIC_TEST", "OTHER");
CTDR_ENUM_TRAITS(OverallStatus, "overallStatus", "ACTIVE_NOT_RECRUITING", "COMPLETED",
                 "ENROLLING_BY_INVITATION", "NOT_YET_RECRUITING", "RECRUITING", "SUSPENDED",
                 "TERMINATED", "WITHDRAWN", "AVAILABLE", "NO_LONGER_AVAILABLE",
                 "TEMPORARILY_NOT_AVAILABLE", "APPROVED_FOR_MARKETING", "WITHHELD", "UNKNOWN");
CTDR_ENUM_TRAITS(StudyType, "studyType", "INTERVENTIONAL", "OBSERVATIONAL", "EXPANDED_ACCESS");
CTDR_ENUM_TRAITS(SponsorClass, "leadSponsorClass", "NIH", "FED", "OTHER_GOV", "INDIV", "INDUSTRY",
                 "NETWORK", "AMBIG", "OTHER", "UNKNOWN");

#undef CTDR_ENUM_TRAITS

template <typename E>
constexpr std::string_view to_string(E value) {
  return EnumTraits<E>::names[static_cast<std::size_t>(value)];
}

template <typename E>
constexpr std::optional<E> enum_from_string(std::string_view raw) {
  const auto& names = EnumTraits<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == raw) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <typename E>
constexpr std::size_t enum_size() {
  return EnumTraits<E>::names.size();
}

/// The six encoded categorical features.
enum class CategoricalFeature { kPhases, kPrimaryPurpose, kMasking, kSex, kArmGroupTypes, kInterventionTypes };

inline constexpr std::array<CategoricalFeature, 6> kCategoricalFeatures = {
    CategoricalFeature::kPhases,        CategoricalFeature::kPrimaryPurpose,
    CategoricalFeature::kMasking,       CategoricalFeature::kSex,
    CategoricalFeature::kArmGroupTypes, CategoricalFeature::kInterventionTypes,
};

std::string_view feature_name(CategoricalFeature feature);

/// Throws UnknownCategory for names outside the six features.
CategoricalFeature categorical_feature_from_name(std::string_view name);

bool is_multi_label(CategoricalFeature feature);

/// Category names in id order: element i is the category with id i.
std::span<const std::string_view> category_names(CategoricalFeature feature);

/// Id of a raw category string. Throws UnknownCategory.
int encode_categorical(CategoricalFeature feature, std::string_view raw);
int encode_categorical(std::string_view feature, std::string_view raw);

/// Element-wise encoding of a multi-label value; returns sorted unique ids.
std::vector<int> encode_categorical_set(CategoricalFeature feature,
                                        std::span<const std::string> raw);

/// Inverse of encode_categorical. Throws UnknownCategory for ids out of range.
std::string_view decode_categorical(CategoricalFeature feature, int id);

}  // namespace ctdr
