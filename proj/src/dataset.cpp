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

#include "ctdr/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "ctdr/errors.hpp"
#include "json.hpp"

namespace ctdr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename E>
std::optional<std::vector<E>> type_set(const std::vector<std::optional<E>>& values) {
  std::vector<E> out;
  for (const auto& v : values) {
    if (v) out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<std::string> join_nonempty(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (trim(p).empty()) continue;
    if (!out.empty()) out += sep;
    out += p;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

// JSON helpers for the dataset file. Missing values are written as null.

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename E>
json enum_json(const std::optional<E>& v) {
  return v ? json(std::string(to_string(*v))) : json(nullptr);
}

template <typename E>
json enum_set_json(const std::optional<std::vector<E>>& v) {
  if (!v) return nullptr;
  json arr = json::array();
  for (auto e : *v) arr.push_back(std::string(to_string(e)));
  return arr;
}

json date_json(const std::optional<Date>& d) {
  return d ? json(format_date(*d)) : json(nullptr);
}

const json& field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaVersionMismatch(std::string("dataset row lacks field '") + key + "'");
  return *it;
}

template <typename T>
std::optional<T> opt_from(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

template <typename E>
E enum_value(const std::string& raw, const char* key) {
  const auto e = enum_from_string<E>(raw);
  if (!e) throw InvalidEnumValue(std::string(key) + "='" + raw + "'");
  return *e;
}

template <typename E>
std::optional<E> enum_from(const json& obj, const char* key) {
  const auto raw = opt_from<std::string>(obj, key);
  if (!raw) return std::nullopt;
  return enum_value<E>(*raw, key);
}

template <typename E>
std::optional<std::vector<E>> enum_set_from(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (v.is_null()) return std::nullopt;
  std::vector<E> out;
  for (const auto& e : v) out.push_back(enum_value<E>(e.get<std::string>(), key));
  return out;
}

std::optional<Date> date_from(const json& obj, const char* key) {
  const auto raw = opt_from<std::string>(obj, key);
  if (!raw) return std::nullopt;
  auto d = parse_date(*raw);
  if (!d) throw SchemaVersionMismatch(std::string("bad date in ") + key);
  return d;
}

json features_json(const FeatureRow& f) {
  return {
      {"nctId", f.nct_id},
      {"primaryPurpose", enum_json(f.primary_purpose)},
      {"masking", enum_json(f.masking)},
      {"sex", enum_json(f.sex)},
      {"phases", enum_set_json(f.phases)},
      {"armGroupTypes", enum_set_json(f.arm_group_types)},
      {"interventionTypes", enum_set_json(f.intervention_types)},
      {"healthyVolunteers", opt_json(f.healthy_volunteers)},
      {"oversightHasDmc", opt_json(f.oversight_has_dmc)},
      {"enrollmentCount", opt_json(f.enrollment_count)},
      {"numArms", opt_json(f.num_arms)},
      {"numInterventions", opt_json(f.num_interventions)},
      {"numLocations", opt_json(f.num_locations)},
      {"allocation", opt_json(f.allocation)},
      {"interventionModel", opt_json(f.intervention_model)},
      {"briefSummary", opt_json(f.brief_summary)},
      {"detailedDescription", opt_json(f.detailed_description)},
      {"conditions", opt_json(f.conditions)},
      {"conditionsKeywords", opt_json(f.conditions_keywords)},
      {"armDescriptions", opt_json(f.arm_descriptions)},
      {"interventionNames", opt_json(f.intervention_names)},
      {"interventionDescriptions", opt_json(f.intervention_descriptions)},
      {"locationDetails", opt_json(f.location_details)},
  };
}

FeatureRow features_from(const json& j) {
  FeatureRow f;
  f.nct_id = field(j, "nctId").get<std::string>();
  f.primary_purpose = enum_from<PrimaryPurpose>(j, "primaryPurpose");
  f.masking = enum_from<Masking>(j, "masking");
  f.sex = enum_from<Sex>(j, "sex");
  f.phases = enum_set_from<Phase>(j, "phases");
  f.arm_group_types = enum_set_from<ArmGroupType>(j, "armGroupTypes");
  f.intervention_types = enum_set_from<InterventionType>(j, "interventionTypes");
  f.healthy_volunteers = opt_from<bool>(j, "healthyVolunteers");
  f.oversight_has_dmc = opt_from<bool>(j, "oversightHasDmc");
  f.enrollment_count = opt_from<std::int64_t>(j, "enrollmentCount");
  f.num_arms = opt_from<std::int64_t>(j, "numArms");
  f.num_interventions = opt_from<std::int64_t>(j, "numInterventions");
  f.num_locations = opt_from<std::int64_t>(j, "numLocations");
  f.allocation = opt_from<std::string>(j, "allocation");
  f.intervention_model = opt_from<std::string>(j, "interventionModel");
  f.brief_summary = opt_from<std::string>(j, "briefSummary");
  f.detailed_description = opt_from<std::string>(j, "detailedDescription");
  f.conditions = opt_from<std::string>(j, "conditions");
  f.conditions_keywords = opt_from<std::string>(j, "conditionsKeywords");
  f.arm_descriptions = opt_from<std::string>(j, "armDescriptions");
  f.intervention_names = opt_from<std::string>(j, "interventionNames");
  f.intervention_descriptions = opt_from<std::string>(j, "interventionDescriptions");
  f.location_details = opt_from<std::string>(j, "locationDetails");
  return f;
}

json aux_json(const AuxiliaryRow& a) {
  json j = {
      {"nctId", a.nct_id},
      {"overallStatus", std::string(to_string(a.overall_status))},
      {"leadSponsorClass", enum_json(a.lead_sponsor_class)},
      {"leadSponsorName", opt_json(a.lead_sponsor_name)},
      {"hasProtocol", a.has_protocol},
      {"hasSap", a.has_sap},
      {"hasIcf", a.has_icf},
      {"startDate", date_json(a.start_date)},
      {"completionDate", date_json(a.completion_date)},
      {"protocolPdfLinks", a.protocol_pdf_links},
      {"wilson_lower_bound", opt_json(a.wilson_lower_bound)},
      {"ct_level_ade_population", opt_json(a.ct_level_ade_population)},
      {"sum_dosing_errors", opt_json(a.sum_dosing_errors)},
      {"dosing_error_rate", opt_json(a.dosing_error_rate)},
      {"label", opt_json(a.label)},
  };
  for (const auto& [id, n] : a.dosing_term_counts) j["count_" + id] = n;
  return j;
}

AuxiliaryRow aux_from(const json& j) {
  AuxiliaryRow a;
  a.nct_id = field(j, "nctId").get<std::string>();
  a.overall_status = enum_value<OverallStatus>(field(j, "overallStatus").get<std::string>(), "overallStatus");
  a.lead_sponsor_class = enum_from<SponsorClass>(j, "leadSponsorClass");
  a.lead_sponsor_name = opt_from<std::string>(j, "leadSponsorName");
  a.has_protocol = field(j, "hasProtocol").get<bool>();
  a.has_sap = field(j, "hasSap").get<bool>();
  a.has_icf = field(j, "hasIcf").get<bool>();
  a.start_date = date_from(j, "startDate");
  a.completion_date = date_from(j, "completionDate");
  a.protocol_pdf_links = field(j, "protocolPdfLinks").get<std::vector<std::string>>();
  a.wilson_lower_bound = opt_from<double>(j, "wilson_lower_bound");
  a.ct_level_ade_population = opt_from<std::int64_t>(j, "ct_level_ade_population");
  a.sum_dosing_errors = opt_from<std::int64_t>(j, "sum_dosing_errors");
  a.dosing_error_rate = opt_from<double>(j, "dosing_error_rate");
  a.label = opt_from<bool>(j, "label");
  for (const auto& [key, value] : j.items()) {
    if (key.rfind("count_", 0) == 0) a.dosing_term_counts[key.substr(6)] = value.get<std::int64_t>();
  }
  return a;
}

std::vector<fs::path> expand_paths(const std::vector<std::string>& paths) {
  std::vector<fs::path> files;
  for (const auto& p : paths) {
    std::error_code ec;
    const fs::path path(p);
    if (fs::is_directory(path, ec)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(path, ec)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext == ".json" || ext == ".jsonl" || ext == ".ndjson") found.push_back(e.path());
      }
      if (ec) throw IoError("cannot scan directory '" + p + "': " + ec.message());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(path, ec)) {
      files.push_back(path);
    } else {
      throw IoError("no such file or directory: '" + p + "'");
    }
  }
  return files;
}

struct Document {
  std::string source;
  std::string text;
};

std::vector<Document> split_documents(const fs::path& file) {
  const std::string text = read_file(file.string());
  const auto ext = file.extension().string();
  std::vector<Document> docs;
  const auto by_line = [&] {
    std::vector<Document> out;
    std::size_t line_no = 0;
    for (const auto& line : split_string(text, '\n')) {
      ++line_no;
      if (trim(line).empty()) continue;
      out.push_back({file.string() + ":" + std::to_string(line_no), line});
    }
    return out;
  };
  if (ext == ".jsonl" || ext == ".ndjson") return by_line();
  if (trim(text).empty()) return docs;
  if (json::accept(text)) return {{file.string(), text}};
  // Not a single document; treat as newline-delimited when it has several lines.
  auto lines = by_line();
  if (lines.size() > 1) return lines;
  return {{file.string(), text}};
}

}  // namespace

std::array<const std::optional<std::string>*, 10> text_fields(const FeatureRow& row) {
  return {&row.allocation,       &row.intervention_model,  &row.brief_summary,
          &row.detailed_description, &row.conditions,       &row.conditions_keywords,
          &row.arm_descriptions, &row.intervention_names,  &row.intervention_descriptions,
          &row.location_details};
}

FeatureRow extract_features(const StudyRecord& r) {
  FeatureRow f;
  f.nct_id = r.nct_id;
  f.primary_purpose = r.design.primary_purpose;
  f.masking = r.design.masking;
  f.sex = r.eligibility.sex;
  if (!r.design.phases.empty()) f.phases = r.design.phases;

  std::vector<std::optional<ArmGroupType>> arm_types;
  std::vector<std::string> arm_text;
  for (const auto& a : r.arms) {
    arm_types.push_back(a.group_type);
    if (a.description) arm_text.push_back(a.label.empty() ? *a.description : a.label + ": " + *a.description);
  }
  f.arm_group_types = type_set(arm_types);

  std::vector<std::optional<InterventionType>> iv_types;
  std::vector<std::string> iv_names;
  std::vector<std::string> iv_desc;
  for (const auto& i : r.interventions) {
    iv_types.push_back(i.type);
    iv_names.push_back(i.name);
    if (i.description) iv_desc.push_back(*i.description);
  }
  f.intervention_types = type_set(iv_types);

  f.healthy_volunteers = r.eligibility.healthy_volunteers;
  f.oversight_has_dmc = r.design.oversight_has_dmc;
  f.enrollment_count = r.design.enrollment_count;
  f.num_arms = static_cast<std::int64_t>(r.arms.size());
  f.num_interventions = static_cast<std::int64_t>(r.interventions.size());
  f.num_locations = static_cast<std::int64_t>(r.locations_count());

  f.allocation = r.design.allocation;
  f.intervention_model = r.design.intervention_model;
  f.brief_summary = r.brief_summary;
  f.detailed_description = r.detailed_description;
  f.conditions = join_nonempty(r.conditions, "; ");
  f.conditions_keywords = join_nonempty(r.keywords, "; ");
  f.arm_descriptions = join_nonempty(arm_text, "\n");
  f.intervention_names = join_nonempty(iv_names, "; ");
  f.intervention_descriptions = join_nonempty(iv_desc, "\n");
  f.location_details = r.location_text();
  return f;
}

AuxiliaryRow extract_auxiliary(const StudyRecord& r) {
  AuxiliaryRow a;
  a.nct_id = r.nct_id;
  a.overall_status = r.overall_status;
  a.lead_sponsor_class = r.sponsor_class;
  a.lead_sponsor_name = r.lead_sponsor_name;
  a.has_protocol = r.has_protocol;
  a.has_sap = r.has_sap;
  a.has_icf = r.has_icf;
  a.start_date = r.start_date;
  a.completion_date = r.completion_date;
  a.protocol_pdf_links = r.protocol_pdf_links();
  return a;
}

std::vector<std::string> expand_input_paths(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& f : expand_paths(paths)) out.push_back(f.string());
  return out;
}

IngestResult ingest_corpus(const std::vector<std::string>& paths, const Date& cutoff) {
  IngestResult result;
  std::vector<DatasetEntry> kept;
  for (const auto& file : expand_paths(paths)) {
    for (const auto& doc : split_documents(file)) {
      std::vector<std::string> warnings;
      StudyRecord record;
      try {
        record = parse_study(doc.text, &warnings);
      } catch (const Error& e) {
        result.log.rejected.push_back({doc.source, e.what()});
        spdlog::debug("rejected {}: {}", doc.source, e.what());
        continue;
      }
      ++result.log.parsed;
      for (auto& w : warnings) result.log.warnings.push_back(record.nct_id + ": " + w);
      if (!passes_inclusion(record, cutoff)) {
        ++result.log.excluded;
        continue;
      }
      DatasetEntry entry{extract_features(record), extract_auxiliary(record), std::move(record)};
      kept.push_back(std::move(entry));
    }
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const DatasetEntry& a, const DatasetEntry& b) { return a.nct_id() < b.nct_id(); });
  for (auto& e : kept) {
    if (!result.dataset.entries.empty() && result.dataset.entries.back().nct_id() == e.nct_id()) {
      result.log.rejected.push_back({e.nct_id(), "duplicate nct_id"});
      continue;
    }
    result.dataset.entries.push_back(std::move(e));
  }
  spdlog::info("ingest: parsed={} rejected={} excluded={} kept={}", result.log.parsed,
               result.log.rejected.size(), result.log.excluded, result.dataset.size());
  return result;
}

std::string dataset_to_string(const Dataset& dataset) {
  std::string out;
  out += json{{"schema", "ctdr.dataset"}, {"version", kDatasetSchemaVersion}, {"rows", dataset.size()}}.dump();
  out += '\n';
  for (const auto& e : dataset.entries) {
    json row = {{"features", features_json(e.features)},
                {"aux", aux_json(e.aux)},
                {"study", json::parse(serialize_study(e.study))}};
    out += row.dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaVersionMismatch("empty dataset file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error&) {
    throw SchemaVersionMismatch("missing schema header");
  }
  if (!header.is_object() || header.value("schema", "") != "ctdr.dataset" || !header.contains("version")) {
    throw SchemaVersionMismatch("missing schema header");
  }
  if (header["version"] != kDatasetSchemaVersion) {
    throw SchemaVersionMismatch("dataset version " + header["version"].dump() + ", expected " +
                                std::to_string(kDatasetSchemaVersion));
  }
  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json row = json::parse(line);
      DatasetEntry e;
      e.features = features_from(field(row, "features"));
      e.aux = aux_from(field(row, "aux"));
      e.study = parse_study(field(row, "study").dump());
      ds.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw SchemaVersionMismatch("dataset line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (header.contains("rows") && header["rows"] != ds.size()) {
    throw SchemaVersionMismatch("row count does not match header");
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  write_file(path, dataset_to_string(dataset));
}

Dataset load_dataset(const std::string& path) { return dataset_from_string(read_file(path)); }

}  // namespace ctdr
