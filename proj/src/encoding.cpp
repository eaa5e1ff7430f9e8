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

#include "ctdr/encoding.hpp"

#include <algorithm>

#include "ctdr/errors.hpp"

namespace ctdr {

namespace {

template <typename E>
std::span<const std::string_view> names_of() {
  return std::span<const std::string_view>(EnumTraits<E>::names);
}

}  // namespace

std::string_view feature_name(CategoricalFeature feature) {
  switch (feature) {
    case CategoricalFeature::kPhases: return EnumTraits<Phase>::field;
    case CategoricalFeature::kPrimaryPurpose: return EnumTraits<PrimaryPurpose>::field;
    case CategoricalFeature::kMasking: return EnumTraits<Masking>::field;
    case CategoricalFeature::kSex: return EnumTraits<Sex>::field;
    case CategoricalFeature::kArmGroupTypes: return EnumTraits<ArmGroupType>::field;
    case CategoricalFeature::kInterventionTypes: return EnumTraits<InterventionType>::field;
  }
  return {};
}

CategoricalFeature categorical_feature_from_name(std::string_view name) {
  for (auto f : kCategoricalFeatures) {
    if (feature_name(f) == name) return f;
  }
  throw UnknownCategory("no categorical feature named '" + std::string(name) + "'");
}

bool is_multi_label(CategoricalFeature feature) {
  return feature == CategoricalFeature::kPhases || feature == CategoricalFeature::kArmGroupTypes ||
         feature == CategoricalFeature::kInterventionTypes;
}

std::span<const std::string_view> category_names(CategoricalFeature feature) {
  switch (feature) {
    case CategoricalFeature::kPhases: return names_of<Phase>();
    case CategoricalFeature::kPrimaryPurpose: return names_of<PrimaryPurpose>();
    case CategoricalFeature::kMasking: return names_of<Masking>();
    case CategoricalFeature::kSex: return names_of<Sex>();
    case CategoricalFeature::kArmGroupTypes: return names_of<ArmGroupType>();
    case CategoricalFeature::kInterventionTypes: return names_of<InterventionType>();
  }
  return {};
}

int encode_categorical(CategoricalFeature feature, std::string_view raw) {
  const auto names = category_names(feature);
  const auto it = std::find(names.begin(), names.end(), raw);
  if (it == names.end()) {
    throw UnknownCategory(std::string(feature_name(feature)) + "='" + std::string(raw) + "'");
  }
  return static_cast<int>(it - names.begin());
}

int encode_categorical(std::string_view feature, std::string_view raw) {
  return encode_categorical(categorical_feature_from_name(feature), raw);
}

std::vector<int> encode_categorical_set(CategoricalFeature feature,
                                        std::span<const std::string> raw) {
  std::vector<int> ids;
  ids.reserve(raw.size());
  for (const auto& r : raw) ids.push_back(encode_categorical(feature, r));
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::string_view decode_categorical(CategoricalFeature feature, int id) {
  const auto names = category_names(feature);
  if (id < 0 || static_cast<std::size_t>(id) >= names.size()) {
    throw UnknownCategory(std::string(feature_name(feature)) + " id " + std::to_string(id));
  }
  return names[static_cast<std::size_t>(id)];
}

}  // namespace ctdr
