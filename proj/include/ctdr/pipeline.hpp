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

#include <string>
#include <string_view>
#include <vector>

#include "ctdr/config.hpp"
#include "ctdr/split.hpp"

namespace ctdr {

enum class Stage {
  kIngest,
  kLabel,
  kSplit,
  kFeatures,
  kTrainTabular,
  kTrainText,
  kCalibrate,
  kFuse,
  kEvaluate,
  kStratify,
};

/// Stages in execution order.
const std::vector<Stage>& all_stages();

std::string_view pipeline_stage_name(Stage s);
Stage pipeline_stage_from_name(std::string_view name);

// Artifact paths relative to the output directory.
namespace artifact {
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kDataset = "dataset.ndjson";
inline constexpr std::string_view kIngestLog = "ingest_log.tsv";
inline constexpr std::string_view kLabeled = "labeled.ndjson";
inline constexpr std::string_view kLabelReport = "label_report.json";
inline constexpr std::string_view kSplit = "split.tsv";
inline constexpr std::string_view kShift = "shift.tsv";
inline constexpr std::string_view kIdf = "features/idf.json";
inline constexpr std::string_view kTabularModel = "models/tabular.json";
inline constexpr std::string_view kSearchTrace = "models/tabular_search.tsv";
inline constexpr std::string_view kTextModel = "models/text.txt";
inline constexpr std::string_view kFusionModel = "models/fusion.json";
inline constexpr std::string_view kFusionTrace = "models/fusion_trace.tsv";
inline constexpr std::string_view kThresholds = "reports/thresholds.json";
inline constexpr std::string_view kMetricsTsv = "reports/metrics.tsv";
inline constexpr std::string_view kMetricsJson = "reports/metrics.json";
inline constexpr std::string_view kStratification = "reports/stratification.tsv";
inline constexpr std::string_view kStratificationStage = "reports/stratification_stage.tsv";
inline constexpr std::string_view kStratificationEnrollment = "reports/stratification_enrollment.tsv";
inline constexpr std::string_view kStratificationModels = "reports/stratification_models.tsv";
inline constexpr std::string_view kSummary = "reports/summary.txt";

std::string tabular_matrix(Partition p);
std::string text_matrix(Partition p);
std::string labels(Partition p);
/// \p variant is one of tabular, text, fusion.
std::string calibration(std::string_view variant);
/// \p variant is one of tabular_raw, tabular_cal, text_raw, text_cal,
/// fusion_raw, fusion_cal.
std::string predictions(std::string_view variant, Partition p);
}  // namespace artifact

/// Content fingerprint of one partition's feature matrices and labels.
/// Calibrations, the fusion weight and thresholds record the validation
/// fingerprint they were fitted on.
std::string partition_fingerprint(const std::string& out_dir, Partition p);

struct StageOutcome {
  Stage stage = Stage::kIngest;
  bool skipped = false;
  std::vector<std::string> outputs;
};

/// Runs one stage unconditionally and records it in the manifest. Throws
/// MissingUpstreamArtifact when an input is absent, FingerprintMismatch when
/// a fitted artifact's lineage does not match the validation split.
StageOutcome run_stage(Stage stage, const PipelineConfig& cfg);

/// Runs every stage in order, skipping those whose inputs, settings and
/// upstream stages are unchanged since their recorded run and whose outputs
/// are intact. Errors are rethrown as StageError.
std::vector<StageOutcome> run_all(const PipelineConfig& cfg);

}  // namespace ctdr
