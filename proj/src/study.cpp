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

#include "ctdr/study.hpp"

#include <algorithm>

#include "ctdr/errors.hpp"
#include "json.hpp"

namespace ctdr {

using nlohmann::json;

namespace {

// Typed accessors over the document tree. Absent or null means missing; a
// present value of the wrong JSON type is a structural error.

const json* child(const json& node, std::string_view key) {
  if (!node.is_object()) return nullptr;
  const auto it = node.find(key);
  if (it == node.end() || it->is_null()) return nullptr;
  return &*it;
}

const json* object_at(const json& node, std::string_view key) {
  const json* c = child(node, key);
  if (c && !c->is_object()) throw MalformedDocument(std::string(key) + ": expected object");
  return c;
}

const json& object_or_empty(const json& node, std::string_view key) {
  static const json kEmpty = json::object();
  const json* c = object_at(node, key);
  return c ? *c : kEmpty;
}

std::vector<const json*> array_at(const json& node, std::string_view key) {
  std::vector<const json*> out;
  const json* c = child(node, key);
  if (!c) return out;
  if (!c->is_array()) throw MalformedDocument(std::string(key) + ": expected array");
  for (const auto& e : *c) out.push_back(&e);
  return out;
}

std::optional<std::string> string_at(const json& node, std::string_view key) {
  const json* c = child(node, key);
  if (!c) return std::nullopt;
  if (!c->is_string()) throw MalformedDocument(std::string(key) + ": expected string");
  return c->get<std::string>();
}

// Text fields: blank strings are missing.
std::optional<std::string> text_at(const json& node, std::string_view key) {
  auto s = string_at(node, key);
  if (s && trim(*s).empty()) return std::nullopt;
  return s;
}

std::optional<bool> bool_at(const json& node, std::string_view key) {
  const json* c = child(node, key);
  if (!c) return std::nullopt;
  if (!c->is_boolean()) throw MalformedDocument(std::string(key) + ": expected boolean");
  return c->get<bool>();
}

std::optional<std::int64_t> count_at(const json& node, std::string_view key) {
  const json* c = child(node, key);
  if (!c) return std::nullopt;
  if (!c->is_number_integer()) throw MalformedDocument(std::string(key) + ": expected integer");
  const auto v = c->get<std::int64_t>();
  if (v < 0) throw ConstraintViolation(std::string(key) + " is negative");
  return v;
}

std::vector<std::string> strings_at(const json& node, std::string_view key) {
  std::vector<std::string> out;
  for (const json* e : array_at(node, key)) {
    if (!e->is_string()) throw MalformedDocument(std::string(key) + ": expected array of strings");
    out.push_back(e->get<std::string>());
  }
  return out;
}

template <typename E>
std::optional<E> enum_at(const json& node, std::string_view key) {
  const auto raw = string_at(node, key);
  if (!raw) return std::nullopt;
  const auto value = enum_from_string<E>(*raw);
  if (!value) throw InvalidEnumValue(std::string(key) + "='" + *raw + "'");
  return value;
}

std::optional<Date> date_at(const json& node, std::string_view key,
                            std::vector<std::string>* warnings) {
  const auto raw = string_at(node, key);
  if (!raw) return std::nullopt;
  auto date = parse_date(*raw);
  if (!date && warnings) warnings->push_back(std::string(key) + ": unparseable date '" + *raw + "'");
  return date;
}

std::optional<Date> date_struct_at(const json& node, std::string_view key,
                                   std::vector<std::string>* warnings) {
  const json* s = object_at(node, key);
  if (!s) return std::nullopt;
  return date_at(*s, "date", warnings);
}

template <typename T, typename F>
void put(json& node, const char* key, const std::optional<T>& value, F&& convert) {
  if (value) node[key] = convert(*value);
}

template <typename T>
void put(json& node, const char* key, const std::optional<T>& value) {
  if (value) node[key] = *value;
}

}  // namespace

bool is_valid_nct_id(std::string_view id) {
  if (id.size() != 11 || id.substr(0, 3) != "NCT") return false;
  return std::all_of(id.begin() + 3, id.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<std::string> StudyRecord::location_text() const {
  if (locations.empty()) return std::nullopt;
  std::string out;
  for (const auto& loc : locations) {
    std::string line;
    for (const auto* part : {&loc.facility, &loc.city, &loc.state, &loc.country}) {
      if (!*part) continue;
      if (!line.empty()) line += ", ";
      line += **part;
    }
    if (!out.empty()) out += '\n';
    out += line;
  }
  return out;
}

std::vector<std::string> StudyRecord::protocol_pdf_links() const {
  std::vector<std::string> links;
  const std::string shard = nct_id.size() >= 2 ? nct_id.substr(nct_id.size() - 2) : nct_id;
  for (const auto& f : large_doc_filenames) {
    links.push_back("https://cdn.clinicaltrials.gov/large-docs/" + shard + "/" + nct_id + "/" + f);
  }
  return links;
}

StudyRecord parse_study(std::string_view document_text, std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(document_text);
  } catch (const json::parse_error& e) {
    throw MalformedDocument(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MalformedDocument("document is not a JSON object");
  const json* protocol = object_at(doc, "protocolSection");
  if (!protocol) throw MalformedDocument("missing protocolSection");

  StudyRecord r;
  const json& ident = object_or_empty(*protocol, "identificationModule");
  const auto nct = string_at(ident, "nctId");
  if (!nct) throw MalformedDocument("missing identificationModule.nctId");
  if (!is_valid_nct_id(*nct)) throw ConstraintViolation("nctId '" + *nct + "' is not NCT + 8 digits");
  r.nct_id = *nct;

  const json& status = object_or_empty(*protocol, "statusModule");
  const auto overall = enum_at<OverallStatus>(status, "overallStatus");
  if (!overall) throw MalformedDocument("missing statusModule.overallStatus");
  r.overall_status = *overall;
  r.start_date = date_struct_at(status, "startDateStruct", warnings);
  r.completion_date = date_struct_at(status, "completionDateStruct", warnings);
  r.first_submit_date = date_at(status, "studyFirstSubmitDate", warnings);
  if (r.start_date && r.completion_date && *r.completion_date < *r.start_date) {
    throw ConstraintViolation("completion date precedes start date");
  }

  const json& sponsor = object_or_empty(object_or_empty(*protocol, "sponsorCollaboratorsModule"),
                                        "leadSponsor");
  r.lead_sponsor_name = text_at(sponsor, "name");
  r.sponsor_class = enum_at<SponsorClass>(sponsor, "class");

  r.design.oversight_has_dmc = bool_at(object_or_empty(*protocol, "oversightModule"), "oversightHasDmc");

  const json& desc = object_or_empty(*protocol, "descriptionModule");
  r.brief_summary = text_at(desc, "briefSummary");
  r.detailed_description = text_at(desc, "detailedDescription");

  const json& cond = object_or_empty(*protocol, "conditionsModule");
  r.conditions = strings_at(cond, "conditions");
  r.keywords = strings_at(cond, "keywords");

  const json& design = object_or_empty(*protocol, "designModule");
  const auto study_type = enum_at<StudyType>(design, "studyType");
  if (!study_type) throw MalformedDocument("missing designModule.studyType");
  r.study_type = *study_type;
  for (const auto& p : strings_at(design, "phases")) {
    const auto phase = enum_from_string<Phase>(p);
    if (!phase) throw InvalidEnumValue("phases='" + p + "'");
    r.design.phases.push_back(*phase);
  }
  std::sort(r.design.phases.begin(), r.design.phases.end());
  r.design.phases.erase(std::unique(r.design.phases.begin(), r.design.phases.end()),
                        r.design.phases.end());
  const json& info = object_or_empty(design, "designInfo");
  r.design.allocation = text_at(info, "allocation");
  r.design.intervention_model = text_at(info, "interventionModel");
  r.design.primary_purpose = enum_at<PrimaryPurpose>(info, "primaryPurpose");
  r.design.masking = enum_at<Masking>(object_or_empty(info, "maskingInfo"), "masking");
  r.design.enrollment_count = count_at(object_or_empty(design, "enrollmentInfo"), "count");

  const json& arms = object_or_empty(*protocol, "armsInterventionsModule");
  for (const json* a : array_at(arms, "armGroups")) {
    if (!a->is_object()) throw MalformedDocument("armGroups: expected objects");
    ArmGroup arm;
    arm.label = string_at(*a, "label").value_or("");
    arm.group_type = enum_at<ArmGroupType>(*a, "type");
    arm.description = text_at(*a, "description");
    r.arms.push_back(std::move(arm));
  }
  for (const json* iv : array_at(arms, "interventions")) {
    if (!iv->is_object()) throw MalformedDocument("interventions: expected objects");
    InterventionInfo intervention;
    intervention.type = enum_at<InterventionType>(*iv, "type");
    intervention.name = string_at(*iv, "name").value_or("");
    intervention.description = text_at(*iv, "description");
    r.interventions.push_back(std::move(intervention));
  }

  const json& elig = object_or_empty(*protocol, "eligibilityModule");
  r.eligibility.sex = enum_at<Sex>(elig, "sex");
  r.eligibility.healthy_volunteers = bool_at(elig, "healthyVolunteers");

  for (const json* l : array_at(object_or_empty(*protocol, "contactsLocationsModule"), "locations")) {
    if (!l->is_object()) throw MalformedDocument("locations: expected objects");
    r.locations.push_back(Location{text_at(*l, "facility"), text_at(*l, "city"),
                                   text_at(*l, "state"), text_at(*l, "country")});
  }

  const json* results = object_at(doc, "resultsSection");
  r.has_results = bool_at(doc, "hasResults").value_or(results != nullptr);
  if (results) {
    const json& ae = object_or_empty(*results, "adverseEventsModule");
    for (const json* g : array_at(ae, "eventGroups")) {
      if (!g->is_object()) throw MalformedDocument("eventGroups: expected objects");
      AdverseEventGroup group;
      group.id = string_at(*g, "id").value_or("");
      group.title = string_at(*g, "title").value_or("");
      group.serious_num_at_risk = count_at(*g, "seriousNumAtRisk");
      group.other_num_at_risk = count_at(*g, "otherNumAtRisk");
      r.event_groups.push_back(std::move(group));
    }
    for (const auto& [key, serious] : {std::pair{"seriousEvents", true}, std::pair{"otherEvents", false}}) {
      for (const json* ev : array_at(ae, key)) {
        if (!ev->is_object()) throw MalformedDocument(std::string(key) + ": expected objects");
        const std::string term = string_at(*ev, "term").value_or("");
        for (const json* st : array_at(*ev, "stats")) {
          if (!st->is_object()) throw MalformedDocument("stats: expected objects");
          AdverseEventEntry entry;
          entry.arm_group_id = string_at(*st, "groupId").value_or("");
          entry.event_term = term;
          entry.serious = serious;
          entry.num_affected = count_at(*st, "numAffected").value_or(0);
          entry.num_at_risk = count_at(*st, "numAtRisk").value_or(0);
          entry.num_events = count_at(*st, "numEvents");
          if (entry.num_at_risk > 0 && entry.num_affected > entry.num_at_risk) {
            throw ConstraintViolation("adverse event '" + term + "' in " + entry.arm_group_id +
                                      ": numAffected " + std::to_string(entry.num_affected) +
                                      " > numAtRisk " + std::to_string(entry.num_at_risk));
          }
          r.adverse_events.push_back(std::move(entry));
        }
      }
    }
  }

  const json& large = object_or_empty(object_or_empty(doc, "documentSection"), "largeDocumentModule");
  for (const json* d : array_at(large, "largeDocs")) {
    if (!d->is_object()) throw MalformedDocument("largeDocs: expected objects");
    r.has_protocol = r.has_protocol || bool_at(*d, "hasProtocol").value_or(false);
    r.has_sap = r.has_sap || bool_at(*d, "hasSap").value_or(false);
    r.has_icf = r.has_icf || bool_at(*d, "hasIcf").value_or(false);
    if (auto f = string_at(*d, "filename")) r.large_doc_filenames.push_back(*f);
  }
  return r;
}

std::string serialize_study(const StudyRecord& r) {
  const auto date = [](const Date& d) { return format_date(d); };
  const auto date_struct = [](const Date& d) { return json{{"date", format_date(d)}}; };
  const auto name = [](auto e) { return std::string(to_string(e)); };

  json protocol = json::object();
  protocol["identificationModule"] = {{"nctId", r.nct_id}};

  json status = {{"overallStatus", name(r.overall_status)}};
  put(status, "startDateStruct", r.start_date, date_struct);
  put(status, "completionDateStruct", r.completion_date, date_struct);
  put(status, "studyFirstSubmitDate", r.first_submit_date, date);
  protocol["statusModule"] = status;

  if (r.lead_sponsor_name || r.sponsor_class) {
    json lead = json::object();
    put(lead, "name", r.lead_sponsor_name);
    put(lead, "class", r.sponsor_class, name);
    protocol["sponsorCollaboratorsModule"] = {{"leadSponsor", lead}};
  }
  if (r.design.oversight_has_dmc) {
    protocol["oversightModule"] = {{"oversightHasDmc", *r.design.oversight_has_dmc}};
  }
  json desc = json::object();
  put(desc, "briefSummary", r.brief_summary);
  put(desc, "detailedDescription", r.detailed_description);
  if (!desc.empty()) protocol["descriptionModule"] = desc;
  json cond = json::object();
  if (!r.conditions.empty()) cond["conditions"] = r.conditions;
  if (!r.keywords.empty()) cond["keywords"] = r.keywords;
  if (!cond.empty()) protocol["conditionsModule"] = cond;

  json design = {{"studyType", name(r.study_type)}};
  if (!r.design.phases.empty()) {
    json phases = json::array();
    for (auto p : r.design.phases) phases.push_back(name(p));
    design["phases"] = phases;
  }
  json info = json::object();
  put(info, "allocation", r.design.allocation);
  put(info, "interventionModel", r.design.intervention_model);
  put(info, "primaryPurpose", r.design.primary_purpose, name);
  if (r.design.masking) info["maskingInfo"] = {{"masking", name(*r.design.masking)}};
  if (!info.empty()) design["designInfo"] = info;
  if (r.design.enrollment_count) design["enrollmentInfo"] = {{"count", *r.design.enrollment_count}};
  protocol["designModule"] = design;

  json arms_module = json::object();
  if (!r.arms.empty()) {
    json arms = json::array();
    for (const auto& a : r.arms) {
      json arm = {{"label", a.label}};
      put(arm, "type", a.group_type, name);
      put(arm, "description", a.description);
      arms.push_back(arm);
    }
    arms_module["armGroups"] = arms;
  }
  if (!r.interventions.empty()) {
    json ivs = json::array();
    for (const auto& i : r.interventions) {
      json iv = {{"name", i.name}};
      put(iv, "type", i.type, name);
      put(iv, "description", i.description);
      ivs.push_back(iv);
    }
    arms_module["interventions"] = ivs;
  }
  if (!arms_module.empty()) protocol["armsInterventionsModule"] = arms_module;

  json elig = json::object();
  put(elig, "sex", r.eligibility.sex, name);
  put(elig, "healthyVolunteers", r.eligibility.healthy_volunteers);
  if (!elig.empty()) protocol["eligibilityModule"] = elig;

  if (!r.locations.empty()) {
    json locs = json::array();
    for (const auto& l : r.locations) {
      json loc = json::object();
      put(loc, "facility", l.facility);
      put(loc, "city", l.city);
      put(loc, "state", l.state);
      put(loc, "country", l.country);
      locs.push_back(loc);
    }
    protocol["contactsLocationsModule"] = {{"locations", locs}};
  }

  json doc = {{"protocolSection", protocol}, {"hasResults", r.has_results}};

  if (!r.event_groups.empty() || !r.adverse_events.empty()) {
    json ae = json::object();
    json groups = json::array();
    for (const auto& g : r.event_groups) {
      json group = {{"id", g.id}, {"title", g.title}};
      put(group, "seriousNumAtRisk", g.serious_num_at_risk);
      put(group, "otherNumAtRisk", g.other_num_at_risk);
      groups.push_back(group);
    }
    ae["eventGroups"] = groups;
    json serious = json::array();
    json other = json::array();
    // Consecutive rows sharing (serious, term) form one event.
    for (std::size_t i = 0; i < r.adverse_events.size();) {
      const auto& head = r.adverse_events[i];
      json stats = json::array();
      std::size_t j = i;
      for (; j < r.adverse_events.size() && r.adverse_events[j].serious == head.serious &&
             r.adverse_events[j].event_term == head.event_term;
           ++j) {
        const auto& e = r.adverse_events[j];
        json st = {{"groupId", e.arm_group_id}, {"numAffected", e.num_affected},
                   {"numAtRisk", e.num_at_risk}};
        put(st, "numEvents", e.num_events);
        stats.push_back(st);
      }
      (head.serious ? serious : other).push_back({{"term", head.event_term}, {"stats", stats}});
      i = j;
    }
    ae["seriousEvents"] = serious;
    ae["otherEvents"] = other;
    doc["resultsSection"] = {{"adverseEventsModule", ae}};
  }

  if (r.has_protocol || r.has_sap || r.has_icf || !r.large_doc_filenames.empty()) {
    json docs = json::array();
    // Flags are study-level; they ride on the first document entry.
    json first = {{"hasProtocol", r.has_protocol}, {"hasSap", r.has_sap}, {"hasIcf", r.has_icf}};
    if (r.large_doc_filenames.empty()) {
      docs.push_back(first);
    } else {
      for (std::size_t i = 0; i < r.large_doc_filenames.size(); ++i) {
        json d = i == 0 ? first : json::object();
        d["filename"] = r.large_doc_filenames[i];
        docs.push_back(d);
      }
    }
    doc["documentSection"] = {{"largeDocumentModule", {{"largeDocs", docs}}}};
  }
  return doc.dump();
}

bool passes_inclusion(const StudyRecord& record, const Date& cutoff) {
  const bool finished = record.overall_status == OverallStatus::kCompleted ||
                        record.overall_status == OverallStatus::kTerminated;
  return finished && record.study_type == StudyType::kInterventional && record.has_results &&
         record.completion_date.has_value() && record.first_submit_date.has_value() &&
         *record.first_submit_date < cutoff;
}

}  // namespace ctdr
