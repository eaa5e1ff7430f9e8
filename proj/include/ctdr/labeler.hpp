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
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctdr/dataset.hpp"
#include "ctdr/study.hpp"

namespace ctdr {

struct DosingConcept {
  std::string canonical_id;
  std::string canonical_term;
  std::vector<std::string> synonyms;
};

/// Curated dosing-error concepts. Always loaded from a file; see
/// parse_term_list for the format.
struct DosingTermList {
  std::string dictionary_version;
  std::vector<DosingConcept> concepts;  // sorted by canonical_id
};

/// Tab-separated term list:
///
///   # dictionary_version: <version>
///   canonical_id<TAB>canonical_term<TAB>synonym
///   C001<TAB>accidental overdose<TAB>overdose accidental
///
/// One row per (concept, synonym). Throws ConstraintViolation on duplicate
/// ids with conflicting canonical terms, blank synonyms or a missing header.
DosingTermList parse_term_list(const std::string& text);
DosingTermList load_term_list(const std::string& path);

/// Case-folds, turns punctuation into spaces, collapses whitespace and trims.
std::string normalize_term(std::string_view raw);

/// Edit distance over Unicode code points of UTF-8 input.
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

/// 1 - distance / max(length); 1.0 for two empty strings.
double levenshtein_ratio(std::string_view a, std::string_view b);

struct TermMatch {
  std::string canonical_id;
  double similarity = 0.0;

  bool operator==(const TermMatch&) const = default;
};

/// Best-scoring concept for an adverse-event term, scored as the maximum
/// Levenshtein ratio over the concept's canonical term and synonyms after
/// normalization. Ties go to the lowest canonical_id. Returns nullopt below
/// \p min_similarity. Throws EmptyTermList.
std::optional<TermMatch> match_term(std::string_view ae_term, const DosingTermList& list,
                                    double min_similarity);

/// match_term with the term list pre-normalized and results memoized per
/// normalized input. Not thread-safe; use one per thread.
class TermMatcher {
 public:
  TermMatcher(const DosingTermList& list, double min_similarity);

  std::optional<TermMatch> match(std::string_view ae_term);

 private:
  struct Candidate {
    std::size_t concept_index;
    std::u32string text;
  };

  std::optional<TermMatch> match_normalized(const std::string& normalized) const;

  const DosingTermList& list_;
  double min_similarity_;
  std::vector<Candidate> candidates_;
  std::unordered_map<std::string, std::optional<TermMatch>> cache_;
};

/// Inverse standard normal CDF; absolute error below 1e-12 on (0, 1).
double normal_quantile(double p);

struct WilsonParams {
  double confidence = 0.95;
  double threshold = 0.0001;

  /// Two-sided normal quantile for the confidence level (1.959964 at 0.95).
  double z() const;
};

/// Lower end of the Wilson score interval for k successes out of n.
/// Throws InvalidCounts unless 0 <= k <= n, n >= 1 and z > 0.
double wilson_lower_bound(std::int64_t k, std::int64_t n, double z);

struct TrialAggregates {
  std::string nct_id;
  std::int64_t at_risk_n = 0;
  std::int64_t error_k = 0;
  double rate = 0.0;
  double wilson_lower = 0.0;
  bool label = false;
  /// Affected counts per matched canonical id, before any capping.
  std::map<std::string, std::int64_t> concept_counts;
  /// Sum of matched affected counts; error_k is this capped at at_risk_n.
  std::int64_t matched_affected_sum = 0;
};

/// Strict exceedance: wilson_lower > threshold.
bool assign_label(const TrialAggregates& agg, const WilsonParams& params);

/// Aggregates arm-level adverse-event tables to the trial. Each arm
/// contributes its at-risk denominator once (the largest one it reports);
/// matched rows contribute their affected counts. Throws NoAtRiskPopulation
/// when the trial has no at-risk participants.
TrialAggregates aggregate_trial(const StudyRecord& record, const DosingTermList& list,
                                double min_similarity, const WilsonParams& params = {});
TrialAggregates aggregate_trial(const StudyRecord& record, TermMatcher& matcher,
                                const WilsonParams& params = {});

struct LabelingParams {
  double min_similarity = 0.90;
  WilsonParams wilson;
};

struct LabelExclusion {
  std::string nct_id;
  std::string reason;
};

struct LabelReport {
  std::string dictionary_version;
  LabelingParams params;
  double z = 0.0;
  std::size_t total = 0;
  std::size_t positives = 0;
  double prevalence = 0.0;
  std::map<std::string, std::int64_t> concept_counts;  // every concept, zero included
  std::vector<LabelExclusion> exclusions;
};

struct LabelingResult {
  Dataset labeled;  // trials with an at-risk population, aux label columns filled
  LabelReport report;
};

LabelingResult label_dataset(const Dataset& dataset, const DosingTermList& list,
                             const LabelingParams& params);

std::string label_report_to_json(const LabelReport& report);

}  // namespace ctdr
