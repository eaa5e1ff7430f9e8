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

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "ctdr/common.hpp"
#include "ctdr/study.hpp"

namespace ctdr::testing {

/// A fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ctdr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline Date date(const char* text) { return *parse_date(text); }

/// A completed interventional trial with results that passes inclusion.
inline StudyRecord make_study(const std::string& nct_id, const char* completion = "2020-06-01") {
  StudyRecord r;
  r.nct_id = nct_id;
  r.overall_status = OverallStatus::kCompleted;
  r.study_type = StudyType::kInterventional;
  r.has_results = true;
  r.start_date = date("2018-01-01");
  r.completion_date = date(completion);
  r.first_submit_date = date("2017-12-01");
  r.design.phases = {Phase::kPhase2};
  r.design.masking = Masking::kNone;
  r.design.enrollment_count = 100;
  r.arms.push_back({"Arm A", ArmGroupType::kExperimental, std::string("drug A daily")});
  r.interventions.push_back({InterventionType::kDrug, "Drug A", std::nullopt});
  r.event_groups.push_back({"EG000", "Arm A", 100, 100});
  return r;
}

inline void add_event(StudyRecord& r, const std::string& group, const std::string& term, std::int64_t affected,
                      std::int64_t at_risk, bool serious = false) {
  AdverseEventEntry e;
  e.arm_group_id = group;
  e.event_term = term;
  e.serious = serious;
  e.num_affected = affected;
  e.num_at_risk = at_risk;
  r.adverse_events.push_back(e);
}

}  // namespace ctdr::testing
