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

#include "ctdr/labeler.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "ctdr/errors.hpp"
#include "json.hpp"

namespace ctdr {

namespace {

// Minimal UTF-8 handling: enough to case-fold ASCII and Latin-1 and to treat
// common Unicode punctuation as separators.

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + static_cast<std::size_t>(len) > s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    return !((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9'));
  }
  return (cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 || (cp >= 0x2000 && cp <= 0x206F) ||
         (cp >= 0x2E00 && cp <= 0x2E7F) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || cp == 0xFFFD;
}

char32_t fold_case(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  if (a.size() < b.size()) return levenshtein(b, a);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double ratio(const std::u32string& a, const std::u32string& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

}  // namespace

DosingTermList parse_term_list(const std::string& text) {
  DosingTermList list;
  std::map<std::string, DosingConcept> by_id;
  bool seen_columns = false;
  std::size_t line_no = 0;
  for (auto line : split_string(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line[0] == '#') {
      const auto body = trim(std::string_view(line).substr(1));
      const std::string key = "dictionary_version:";
      if (body.rfind(key, 0) == 0) list.dictionary_version = trim(std::string_view(body).substr(key.size()));
      continue;
    }
    const auto cols = split_string(line, '\t');
    if (!seen_columns) {
      if (cols.size() != 3 || cols[0] != "canonical_id" || cols[1] != "canonical_term" || cols[2] != "synonym") {
        throw ConstraintViolation("term list: expected header 'canonical_id<TAB>canonical_term<TAB>synonym'");
      }
      seen_columns = true;
      continue;
    }
    const std::string where = "term list line " + std::to_string(line_no);
    if (cols.size() != 3) throw ConstraintViolation(where + ": expected 3 tab-separated columns");
    const std::string id = trim(cols[0]);
    if (id.empty()) throw ConstraintViolation(where + ": empty canonical_id");
    if (normalize_term(cols[1]).empty()) throw ConstraintViolation(where + ": empty canonical_term");
    if (normalize_term(cols[2]).empty()) throw ConstraintViolation(where + ": synonym is empty after normalization");
    auto [it, inserted] = by_id.try_emplace(id, DosingConcept{id, trim(cols[1]), {}});
    if (!inserted && it->second.canonical_term != trim(cols[1])) {
      throw ConstraintViolation(where + ": concept " + id + " has conflicting canonical terms");
    }
    it->second.synonyms.push_back(trim(cols[2]));
  }
  if (list.dictionary_version.empty()) throw ConstraintViolation("term list: missing '# dictionary_version:' header");
  if (!seen_columns) throw ConstraintViolation("term list: missing column header");
  for (auto& [id, entry] : by_id) list.concepts.push_back(std::move(entry));
  return list;
}

DosingTermList load_term_list(const std::string& path) { return parse_term_list(read_file(path)); }

std::string normalize_term(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char32_t cp : decode_utf8(raw)) {
    if (is_separator(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    append_utf8(out, fold_case(cp));
  }
  return out;
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  return levenshtein(decode_utf8(a), decode_utf8(b));
}

double levenshtein_ratio(std::string_view a, std::string_view b) {
  return ratio(decode_utf8(a), decode_utf8(b));
}

TermMatcher::TermMatcher(const DosingTermList& list, double min_similarity)
    : list_(list), min_similarity_(min_similarity) {
  if (list.concepts.empty()) throw EmptyTermList("no concepts loaded");
  if (!(min_similarity > 0.0 && min_similarity <= 1.0)) {
    throw ConfigError("min_similarity must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < list.concepts.size(); ++i) {
    const auto& c = list.concepts[i];
    std::set<std::string> seen;
    for (const auto* s : {&c.canonical_term}) seen.insert(normalize_term(*s));
    for (const auto& s : c.synonyms) seen.insert(normalize_term(s));
    for (const auto& s : seen) candidates_.push_back({i, decode_utf8(s)});
  }
}

std::optional<TermMatch> TermMatcher::match(std::string_view ae_term) {
  std::string normalized = normalize_term(ae_term);
  if (auto it = cache_.find(normalized); it != cache_.end()) return it->second;
  auto result = match_normalized(normalized);
  cache_.emplace(std::move(normalized), result);
  return result;
}

std::optional<TermMatch> TermMatcher::match_normalized(const std::string& normalized) const {
  if (normalized.empty()) return std::nullopt;
  const std::u32string query = decode_utf8(normalized);
  double best = -1.0;
  const DosingConcept* best_concept = nullptr;
  for (const auto& cand : candidates_) {
    const double longest = static_cast<double>(std::max(query.size(), cand.text.size()));
    const double gap = static_cast<double>(query.size() > cand.text.size() ? query.size() - cand.text.size()
                                                                           : cand.text.size() - query.size());
    // The length gap bounds the ratio from above.
    const double bound = 1.0 - gap / longest;
    if (bound < min_similarity_ || bound < best) continue;
    const double score = ratio(query, cand.text);
    const auto& cand_concept = list_.concepts[cand.concept_index];
    if (score > best || (score == best && cand_concept.canonical_id < best_concept->canonical_id)) {
      best = score;
      best_concept = &cand_concept;
    }
  }
  if (!best_concept || best < min_similarity_) return std::nullopt;
  return TermMatch{best_concept->canonical_id, best};
}

std::optional<TermMatch> match_term(std::string_view ae_term, const DosingTermList& list,
                                    double min_similarity) {
  TermMatcher matcher(list, min_similarity);
  return matcher.match(ae_term);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation followed by one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double WilsonParams::z() const {
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("wilson confidence must lie in (0, 1)");
  return normal_quantile(1.0 - (1.0 - confidence) / 2.0);
}

double wilson_lower_bound(std::int64_t k, std::int64_t n, double z) {
  if (n < 1 || k < 0 || k > n) {
    throw InvalidCounts("k=" + std::to_string(k) + ", n=" + std::to_string(n));
  }
  if (!(z > 0.0) || !std::isfinite(z)) throw InvalidCounts("z must be positive");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  // (center - margin) / (1 + z^2/n) rewritten as p^2 / (center + margin):
  // the two agree algebraically and this form has no cancellation.
  const double center = p + z2 / (2.0 * nn);
  const double margin = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return p * p / (center + margin);
}

bool assign_label(const TrialAggregates& agg, const WilsonParams& params) {
  return agg.wilson_lower > params.threshold;
}

TrialAggregates aggregate_trial(const StudyRecord& record, TermMatcher& matcher,
                                const WilsonParams& params) {
  TrialAggregates agg;
  agg.nct_id = record.nct_id;

  std::map<std::string, std::int64_t> arm_at_risk;
  for (const auto& g : record.event_groups) {
    auto& n = arm_at_risk[g.id];
    n = std::max({n, g.serious_num_at_risk.value_or(0), g.other_num_at_risk.value_or(0)});
  }
  for (const auto& e : record.adverse_events) {
    auto& n = arm_at_risk[e.arm_group_id];
    n = std::max(n, e.num_at_risk);
    if (const auto m = matcher.match(e.event_term)) {
      agg.concept_counts[m->canonical_id] += e.num_affected;
      agg.matched_affected_sum += e.num_affected;
    }
  }
  for (const auto& [id, n] : arm_at_risk) agg.at_risk_n += n;
  if (agg.at_risk_n == 0) throw NoAtRiskPopulation(record.nct_id + " reports no participants at risk");

  agg.error_k = std::min(agg.matched_affected_sum, agg.at_risk_n);
  agg.rate = static_cast<double>(agg.error_k) / static_cast<double>(agg.at_risk_n);
  agg.wilson_lower = wilson_lower_bound(agg.error_k, agg.at_risk_n, params.z());
  agg.label = assign_label(agg, params);
  return agg;
}

TrialAggregates aggregate_trial(const StudyRecord& record, const DosingTermList& list,
                                double min_similarity, const WilsonParams& params) {
  TermMatcher matcher(list, min_similarity);
  return aggregate_trial(record, matcher, params);
}

LabelingResult label_dataset(const Dataset& dataset, const DosingTermList& list,
                             const LabelingParams& params) {
  TermMatcher matcher(list, params.min_similarity);
  LabelingResult result;
  auto& report = result.report;
  report.dictionary_version = list.dictionary_version;
  report.params = params;
  report.z = params.wilson.z();
  for (const auto& c : list.concepts) report.concept_counts[c.canonical_id] = 0;

  for (const auto& entry : dataset.entries) {
    TrialAggregates agg;
    try {
      agg = aggregate_trial(entry.study, matcher, params.wilson);
    } catch (const NoAtRiskPopulation& e) {
      report.exclusions.push_back({entry.nct_id(), "NoAtRiskPopulation"});
      continue;
    }
    DatasetEntry labeled = entry;
    auto& aux = labeled.aux;
    aux.dosing_term_counts = agg.concept_counts;
    aux.ct_level_ade_population = agg.at_risk_n;
    aux.sum_dosing_errors = agg.error_k;
    aux.dosing_error_rate = agg.rate;
    aux.wilson_lower_bound = agg.wilson_lower;
    aux.label = agg.label;
    for (const auto& [id, n] : agg.concept_counts) report.concept_counts[id] += n;
    report.positives += agg.label ? 1 : 0;
    result.labeled.entries.push_back(std::move(labeled));
  }
  report.total = result.labeled.size();
  report.prevalence = report.total == 0 ? 0.0
                                        : static_cast<double>(report.positives) / static_cast<double>(report.total);
  spdlog::info("label: {} labeled, {} positive ({:.2f}%), {} excluded", report.total, report.positives,
               100.0 * report.prevalence, report.exclusions.size());
  return result;
}

std::string label_report_to_json(const LabelReport& report) {
  nlohmann::ordered_json j;
  j["dictionary_version"] = report.dictionary_version;
  j["count_basis"] = "num_affected";
  j["min_similarity"] = report.params.min_similarity;
  j["wilson_confidence"] = report.params.wilson.confidence;
  j["wilson_z"] = report.z;
  j["threshold"] = report.params.wilson.threshold;
  j["total"] = report.total;
  j["positives"] = report.positives;
  j["prevalence"] = report.prevalence;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [id, n] : report.concept_counts) counts["count_" + id] = n;
  j["concept_counts"] = counts;
  nlohmann::ordered_json excl = nlohmann::ordered_json::array();
  for (const auto& e : report.exclusions) excl.push_back({{"nct_id", e.nct_id}, {"reason", e.reason}});
  j["exclusions"] = excl;
  return j.dump(2) + "\n";
}

}  // namespace ctdr
