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

#include "ctdr/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ctdr/common.hpp"
#include "ctdr/labeler.hpp"
#include "ctdr/study.hpp"

namespace ctdr {

namespace {

constexpr std::string_view kTermList = R"(# dictionary_version: ctdr-sample-1
canonical_id	canonical_term	synonym
DE01	Accidental overdose	Accidental overdose
DE01	Accidental overdose	Overdose accidental
DE02	Intentional overdose	Intentional overdose
DE03	Overdose	Overdose
DE03	Overdose	Drug overdose
DE04	Underdose	Underdose
DE04	Underdose	Drug underdose
DE05	Medication error	Medication error
DE05	Medication error	Drug administration error
DE06	Wrong dose administered	Wrong dose administered
DE06	Wrong dose administered	Incorrect dose administered
DE07	Extra dose administered	Extra dose administered
DE07	Extra dose administered	Additional dose given in error
DE08	Dose omission	Drug dose omission
DE08	Dose omission	Missed dose
DE09	Wrong drug administered	Wrong drug administered
DE09	Wrong drug administered	Wrong medication given
DE10	Wrong route of administration	Wrong route of administration
DE10	Wrong route of administration	Incorrect route of drug administration
DE11	Wrong dosing schedule	Inappropriate schedule of drug administration
DE11	Wrong dosing schedule	Wrong dosing schedule
DE12	Prescribing error	Prescribing error
DE12	Prescribing error	Prescription error
DE13	Dispensing error	Dispensing error
DE13	Dispensing error	Drug dispensing error
DE14	Preparation error	Product preparation error
DE14	Preparation error	Drug preparation error
DE15	Infusion rate error	Infusion rate too high
DE15	Infusion rate error	Infusion rate error
DE16	Wrong patient	Drug administered to wrong patient
DE17	Dosing frequency error	Incorrect dosing frequency
DE17	Dosing frequency error	Dose frequency error
DE18	Interaction medication error	Labelled drug-drug interaction medication error
DE19	Expired product administered	Expired product administered
DE20	Product administration error	Product administration error
DE21	Delivery device dosing error	Pump dosing error
DE21	Delivery device dosing error	Device delivery system dosing issue
DE22	Double dose	Double dose
DE22	Double dose	Dose taken twice
DE23	Wrong strength	Wrong drug strength dispensed
DE24	Accidental exposure	Accidental exposure to product
)";

constexpr std::array<std::string_view, 16> kOtherEvents = {
    "Headache", "Nausea",     "Fatigue",     "Pyrexia",    "Rash",        "Diarrhoea", "Vomiting",    "Dizziness",
    "Cough",    "Anaemia",    "Neutropenia", "Back pain",  "Insomnia",    "Arthralgia", "Constipation", "Hypertension"};

struct Area {
  std::string_view condition;
  std::string_view drug;
  std::string_view keyword;
  InterventionType type;
  double effect;
};

constexpr std::array<Area, 10> kAreas = {{
    {"Non-small cell lung cancer", "docetaxel", "chemotherapy", InterventionType::kDrug, 1.0},
    {"Acute myeloid leukemia", "cytarabine", "chemotherapy", InterventionType::kDrug, 1.0},
    {"Type 1 diabetes", "insulin glargine", "insulin", InterventionType::kDrug, 0.9},
    {"Venous thromboembolism", "unfractionated heparin", "anticoagulation", InterventionType::kDrug, 0.8},
    {"Hypercholesterolemia", "atorvastatin", "lipids", InterventionType::kDrug, 0.0},
    {"Epilepsy", "levetiracetam", "seizures", InterventionType::kDrug, 0.2},
    {"Seasonal influenza", "quadrivalent influenza vaccine", "vaccine", InterventionType::kBiological, -0.8},
    {"Rheumatoid arthritis", "adalimumab", "biologic", InterventionType::kBiological, 0.3},
    {"Smoking cessation", "motivational counseling program", "behavioral", InterventionType::kBehavioral, -1.2},
    {"Chronic low back pain", "spinal stimulation device", "device", InterventionType::kDevice, -0.6},
}};

struct Phrase {
  std::string_view text;
  double effect;
};

constexpr std::array<Phrase, 5> kRoutes = {{{"continuous intravenous infusion", 1.1},
                                            {"oral tablets", 0.0},
                                            {"subcutaneous injection", 0.4},
                                            {"topical application", -0.5},
                                            {"inhalation", -0.2}}};
constexpr std::array<Phrase, 5> kDosing = {{{"weight-based dosing adjusted at every visit", 1.0},
                                            {"stepwise dose titration", 0.8},
                                            {"a fixed daily dose", 0.0},
                                            {"a single administration", -0.6},
                                            {"body surface area dosing", 0.9}}};
constexpr std::array<Phrase, 4> kPopulations = {{{"pediatric patients", 0.9},
                                                 {"older adults", 0.4},
                                                 {"adult patients", 0.0},
                                                 {"ambulatory outpatients", -0.3}}};

constexpr std::array<std::string_view, 12> kFiller = {
    "Participants are followed for safety and tolerability.",
    "The primary outcome is assessed at the end of treatment.",
    "Secondary outcomes include quality of life questionnaires.",
    "Visits are scheduled every four weeks.",
    "Adverse events are recorded throughout the study period.",
    "Blood samples are collected for pharmacokinetic analysis.",
    "The study is conducted at academic and community sites.",
    "An independent committee reviews unblinded data.",
    "Eligibility is confirmed at a screening visit.",
    "Data are analysed according to the intention to treat principle.",
    "Randomization is stratified by site.",
    "Participants may withdraw at any time.",
};

template <typename T, std::size_t N>
std::size_t pick_weighted(SplitMix64& rng, const std::array<T, N>& weights) {
  double total = 0.0;
  for (auto w : weights) total += static_cast<double>(w);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < N; ++i) {
    u -= static_cast<double>(weights[i]);
    if (u < 0.0) return i;
  }
  return N - 1;
}

Date add_days(const Date& d, std::int64_t days) {
  return Date{std::chrono::sys_days(d) + std::chrono::days(days)};
}

// Misspells a term by dropping one interior letter, keeping it within fuzzy reach.
std::string misspell(SplitMix64& rng, const std::string& term) {
  if (term.size() < 12) return term;
  const auto pos = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(term.size()) - 2));
  if (term[pos] == ' ') return term;
  return term.substr(0, pos) + term.substr(pos + 1);
}

}  // namespace

std::string sample_term_list() { return std::string(kTermList); }

SynthCorpus generate_synthetic_corpus(const SynthConfig& cfg) {
  SplitMix64 rng(cfg.seed);
  const DosingTermList terms = parse_term_list(sample_term_list());
  std::vector<std::string> synonyms;
  for (const auto& c : terms.concepts) synonyms.insert(synonyms.end(), c.synonyms.begin(), c.synonyms.end());

  SynthCorpus out;
  const Date first_start{std::chrono::year{2008}, std::chrono::month{1}, std::chrono::day{1}};
  for (std::size_t i = 0; i < cfg.n_trials; ++i) {
    StudyRecord r;
    char id[16];
    std::snprintf(id, sizeof id, "NCT%08zu", 10000000 + i * 17);
    r.nct_id = id;
    r.overall_status = rng.bernoulli(0.85) ? OverallStatus::kCompleted : OverallStatus::kTerminated;
    r.study_type = StudyType::kInterventional;
    r.has_results = true;

    double tab = 0.0;
    double text = 0.0;

    // Structured design.
    const std::array<double, 7> phase_w = {0.04, 0.16, 0.10, 0.25, 0.20, 0.15, 0.10};
    switch (pick_weighted(rng, phase_w)) {
      case 0: r.design.phases = {Phase::kEarlyPhase1}; tab += 1.2; break;
      case 1: r.design.phases = {Phase::kPhase1}; tab += 1.2; break;
      case 2: r.design.phases = {Phase::kPhase1, Phase::kPhase2}; tab += 0.8; break;
      case 3: r.design.phases = {Phase::kPhase2}; tab += 0.4; break;
      case 4: r.design.phases = {Phase::kPhase3}; break;
      case 5: r.design.phases = {Phase::kPhase4}; tab -= 0.3; break;
      default: r.design.phases = {Phase::kNa}; tab -= 0.6; break;
    }
    const std::array<double, 6> purpose_w = {0.60, 0.12, 0.05, 0.08, 0.08, 0.07};
    constexpr std::array<PrimaryPurpose, 6> kPurposes = {PrimaryPurpose::kTreatment,      PrimaryPurpose::kPrevention,
                                                         PrimaryPurpose::kDiagnostic,     PrimaryPurpose::kSupportiveCare,
                                                         PrimaryPurpose::kBasicScience,   PrimaryPurpose::kOther};
    constexpr std::array<double, 6> kPurposeEffect = {0.5, -0.4, -0.5, 0.3, -0.3, -0.2};
    const std::size_t purpose = pick_weighted(rng, purpose_w);
    if (rng.bernoulli(0.97)) {
      r.design.primary_purpose = kPurposes[purpose];
      tab += kPurposeEffect[purpose];
    }
    const std::array<double, 5> masking_w = {0.45, 0.15, 0.15, 0.10, 0.15};
    const auto masking = static_cast<Masking>(pick_weighted(rng, masking_w));
    if (rng.bernoulli(0.95)) r.design.masking = masking;
    if (masking == Masking::kNone) tab += 0.8;
    if (masking == Masking::kQuadruple) tab -= 0.4;
    r.design.allocation = rng.bernoulli(0.7) ? "RANDOMIZED" : "NON_RANDOMIZED";
    r.design.intervention_model = rng.bernoulli(0.6) ? "PARALLEL" : "SINGLE_GROUP";
    r.design.oversight_has_dmc = rng.bernoulli(0.4);
    if (*r.design.oversight_has_dmc) tab += 0.3;

    const double log_enroll = std::clamp(rng.normal() * 1.1 + 4.3, std::log(8.0), std::log(12000.0));
    const auto enrollment = static_cast<std::int64_t>(std::llround(std::exp(log_enroll)));
    r.design.enrollment_count = enrollment;
    tab += 0.35 * (log_enroll - 4.3);

    r.eligibility.healthy_volunteers = rng.bernoulli(0.18);
    if (*r.eligibility.healthy_volunteers) tab -= 1.0;
    const std::array<double, 3> sex_w = {0.86, 0.09, 0.05};
    r.eligibility.sex = static_cast<Sex>(pick_weighted(rng, sex_w));

    // Area drives conditions, interventions and part of the text.
    const std::array<double, 10> area_w = {0.10, 0.08, 0.10, 0.08, 0.12, 0.10, 0.10, 0.10, 0.12, 0.10};
    const Area& area = kAreas[pick_weighted(rng, area_w)];
    text += 0.5 * area.effect;
    tab += 0.5 * area.effect;
    const Phrase& route = kRoutes[rng.uniform_int(0, kRoutes.size() - 1)];
    const Phrase& dosing = kDosing[rng.uniform_int(0, kDosing.size() - 1)];
    const Phrase& population = kPopulations[rng.uniform_int(0, kPopulations.size() - 1)];
    text += route.effect + dosing.effect + population.effect;

    const auto n_arms = static_cast<int>(rng.uniform_int(1, 4));
    if (n_arms >= 3) tab += 0.4;
    for (int a = 0; a < n_arms; ++a) {
      ArmGroup arm;
      arm.label = std::string("Arm ") + static_cast<char>('A' + a);
      arm.group_type = a == 0 ? ArmGroupType::kExperimental
                              : (rng.bernoulli(0.5) ? ArmGroupType::kPlaceboComparator : ArmGroupType::kActiveComparator);
      arm.description = std::string(area.drug) + " by " + std::string(route.text) + (a == 0 ? "" : " or comparator");
      r.arms.push_back(arm);
    }
    InterventionInfo main;
    main.type = area.type;
    main.name = std::string(area.drug);
    main.description = std::string(route.text) + " with " + std::string(dosing.text);
    r.interventions.push_back(main);
    if (area.type == InterventionType::kDrug) tab += 0.6;
    if (n_arms > 1 && rng.bernoulli(0.5)) {
      InterventionInfo placebo;
      placebo.type = InterventionType::kOther;
      placebo.name = "Placebo";
      placebo.description = "matching placebo";
      r.interventions.push_back(placebo);
    }
    r.conditions = {std::string(area.condition)};
    r.keywords = {std::string(area.keyword)};
    if (rng.bernoulli(0.5)) r.keywords.emplace_back(std::string(population.text));

    std::string summary = "This study evaluates " + std::string(area.drug) + " given by " + std::string(route.text) +
                          " with " + std::string(dosing.text) + " in " + std::string(population.text) + " with " +
                          std::string(area.condition) + ".";
    std::string details;
    const auto n_filler = rng.uniform_int(2, 5);
    for (std::int64_t k = 0; k < n_filler; ++k) {
      details += (details.empty() ? "" : " ") + std::string(kFiller[rng.uniform_int(0, kFiller.size() - 1)]);
    }
    r.brief_summary = summary;
    if (rng.bernoulli(0.9)) r.detailed_description = details;

    const auto n_sites = rng.uniform_int(1, 12);
    for (std::int64_t k = 0; k < n_sites; ++k) {
      Location loc;
      loc.facility = "Site " + std::to_string(k + 1);
      loc.city = k % 2 == 0 ? "Springfield" : "Riverton";
      loc.country = k % 3 == 0 ? "Germany" : "United States";
      r.locations.push_back(loc);
    }
    r.lead_sponsor_name = rng.bernoulli(0.5) ? "Example Pharma" : "University Hospital";
    r.sponsor_class = *r.lead_sponsor_name == "Example Pharma" ? SponsorClass::kIndustry : SponsorClass::kOther;
    r.has_protocol = rng.bernoulli(0.6);
    r.has_sap = r.has_protocol && rng.bernoulli(0.5);
    if (r.has_protocol) r.large_doc_filenames = {"Prot_000.pdf"};

    const auto start = add_days(first_start, rng.uniform_int(0, 15 * 365));
    r.start_date = start;
    r.completion_date = add_days(start, 120 + rng.uniform_int(0, 900) + 60 * n_arms);
    r.first_submit_date = add_days(start, -rng.uniform_int(0, 60));

    // Planted outcome.
    const double logit = cfg.base_logit + cfg.signal * (tab + text);
    const double risk = 1.0 / (1.0 + std::exp(-logit));
    const bool positive = rng.bernoulli(risk);

    std::vector<std::int64_t> at_risk(static_cast<std::size_t>(n_arms));
    for (int a = 0; a < n_arms; ++a) {
      at_risk[static_cast<std::size_t>(a)] = std::max<std::int64_t>(1, enrollment / n_arms);
      AdverseEventGroup g;
      g.id = "EG00" + std::to_string(a);
      g.title = r.arms[static_cast<std::size_t>(a)].label;
      g.serious_num_at_risk = at_risk[static_cast<std::size_t>(a)];
      g.other_num_at_risk = at_risk[static_cast<std::size_t>(a)];
      r.event_groups.push_back(g);
    }
    const auto n_other = rng.uniform_int(1, 5);
    for (std::int64_t k = 0; k < n_other; ++k) {
      const std::string term(kOtherEvents[rng.uniform_int(0, kOtherEvents.size() - 1)]);
      const bool serious = rng.bernoulli(0.2);
      bool duplicate = false;
      for (const auto& e : r.adverse_events) duplicate = duplicate || (e.event_term == term && e.serious == serious);
      if (duplicate) continue;
      for (int a = 0; a < n_arms; ++a) {
        AdverseEventEntry e;
        e.arm_group_id = r.event_groups[static_cast<std::size_t>(a)].id;
        e.event_term = term;
        e.serious = serious;
        e.num_at_risk = at_risk[static_cast<std::size_t>(a)];
        e.num_affected = rng.uniform_int(0, std::max<std::int64_t>(1, e.num_at_risk / 5));
        r.adverse_events.push_back(e);
      }
    }
    if (positive) {
      std::string term = synonyms[rng.uniform_int(0, synonyms.size() - 1)];
      if (rng.bernoulli(0.25)) term = misspell(rng, term);
      AdverseEventEntry e;
      e.arm_group_id = r.event_groups[0].id;
      e.event_term = term;
      e.serious = rng.bernoulli(0.3);
      e.num_at_risk = at_risk[0];
      // Enough events that the rate's lower confidence bound clears a low threshold.
      const std::int64_t floor_k = static_cast<std::int64_t>(std::ceil(0.004 * static_cast<double>(e.num_at_risk))) + 1;
      e.num_affected = std::min(e.num_at_risk, floor_k + rng.uniform_int(0, 2));
      r.adverse_events.push_back(e);
    }

    bool excluded = false;
    if (rng.bernoulli(cfg.excluded_fraction)) {
      excluded = true;
      switch (rng.uniform_int(0, 3)) {
        case 0: r.overall_status = OverallStatus::kRecruiting; break;
        case 1: r.study_type = StudyType::kObservational; break;
        case 2:
          r.has_results = false;
          r.event_groups.clear();
          r.adverse_events.clear();
          break;
        default:
          r.first_submit_date = Date{std::chrono::year{2025}, std::chrono::month{10}, std::chrono::day{2}};
          r.start_date = r.first_submit_date;
          r.completion_date = add_days(*r.start_date, 200);
          break;
      }
    }
    std::string doc = serialize_study(r);
    if (rng.bernoulli(cfg.malformed_fraction)) {
      ++out.n_malformed;
      if (rng.bernoulli(0.5)) {
        doc = doc.substr(0, doc.size() / 2);
      } else {
        const auto pos = doc.find("\"INTERVENTIONAL\"");
        if (pos != std::string::npos) doc.replace(pos, 16, "\"INTERVENTIONISH\"");
        else doc = "{" + doc;
      }
    } else if (excluded) {
      ++out.n_excluded;
    }
    out.documents.push_back(std::move(doc));
    out.true_risk.push_back(risk);
  }
  return out;
}

void write_synthetic_corpus(const SynthConfig& cfg, const std::string& dir) {
  const SynthCorpus corpus = generate_synthetic_corpus(cfg);
  std::string ndjson;
  for (const auto& d : corpus.documents) ndjson += d + "\n";
  const std::filesystem::path root(dir);
  write_file((root / "corpus.ndjson").string(), ndjson);
  write_file((root / "dosing_terms.tsv").string(), sample_term_list());
  const std::string conf = "# synthetic fixture\n"
                           "input.paths = " + (root / "corpus.ndjson").string() + "\n"
                           "labels.term_list = " + (root / "dosing_terms.tsv").string() + "\n"
                           "tabular.search_trials = 20\n"
                           "output.dir = " + (root / "out").string() + "\n";
  write_file((root / "ctdr.conf").string(), conf);
}

}  // namespace ctdr
