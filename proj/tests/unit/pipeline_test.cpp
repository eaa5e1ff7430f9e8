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

#include <gtest/gtest.h>

#include <filesystem>

#include "ctdr/common.hpp"
#include "ctdr/errors.hpp"
#include "ctdr/pipeline.hpp"
#include "ctdr/synth.hpp"
#include "support.hpp"

namespace ctdr {
namespace {

using testing::TempDir;

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthConfig synth;
    synth.n_trials = 200;
    synth.seed = 7;
    write_synthetic_corpus(synth, dir_.str());
    cfg_ = parse_config(read_file(dir_.file("ctdr.conf")));
    cfg_.search_trials = 2;
    cfg_.text_features.dim = 4096;
  }

  std::string out(std::string_view rel) const { return (std::filesystem::path(cfg_.output_dir) / rel).string(); }

  static std::map<Stage, bool> skipped(const std::vector<StageOutcome>& outcomes) {
    std::map<Stage, bool> m;
    for (const auto& o : outcomes) m[o.stage] = o.skipped;
    return m;
  }

  TempDir dir_;
  PipelineConfig cfg_;
};

TEST_F(PipelineTest, FullRunProducesEveryArtifact) {
  const auto outcomes = run_all(cfg_);
  ASSERT_EQ(outcomes.size(), all_stages().size());
  for (const auto& o : outcomes) {
    EXPECT_FALSE(o.skipped);
    for (const auto& path : o.outputs) EXPECT_TRUE(std::filesystem::exists(out(path))) << path;
  }
  for (auto rel : {artifact::kMetricsTsv, artifact::kStratification, artifact::kSummary, artifact::kFusionModel,
                   artifact::kStratificationStage, artifact::kStratificationEnrollment}) {
    EXPECT_TRUE(std::filesystem::exists(out(rel))) << rel;
  }
  const std::string metrics = read_file(out(artifact::kMetricsTsv));
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')),
            "model\tvariant\tsplit\tAUC\tBrier\tF1\tF1_macro\tRecall\tPrecision\tBalAcc\tAcc\tthreshold");
  EXPECT_NE(metrics.find("fusion_cal\ttest"), std::string::npos);
}

TEST_F(PipelineTest, SecondRunSkipsEverything) {
  run_all(cfg_);
  const std::string before = read_file(out(artifact::kManifest));
  for (const auto& o : run_all(cfg_)) EXPECT_TRUE(o.skipped) << pipeline_stage_name(o.stage);
  EXPECT_EQ(read_file(out(artifact::kManifest)), before);
}

TEST_F(PipelineTest, WilsonThresholdChangeRerunsFromLabel) {
  run_all(cfg_);
  cfg_.wilson_threshold = 0.002;
  const auto s = skipped(run_all(cfg_));
  EXPECT_TRUE(s.at(Stage::kIngest));
  for (Stage st : all_stages()) {
    if (st != Stage::kIngest) {
      EXPECT_FALSE(s.at(st)) << pipeline_stage_name(st);
    }
  }
}

TEST_F(PipelineTest, SearchChangeRerunsFromTraining) {
  run_all(cfg_);
  cfg_.search_trials = 3;
  const auto s = skipped(run_all(cfg_));
  for (Stage st : {Stage::kIngest, Stage::kLabel, Stage::kSplit, Stage::kFeatures, Stage::kTrainText}) {
    EXPECT_TRUE(s.at(st)) << pipeline_stage_name(st);
  }
  for (Stage st : {Stage::kTrainTabular, Stage::kCalibrate, Stage::kFuse, Stage::kEvaluate, Stage::kStratify}) {
    EXPECT_FALSE(s.at(st)) << pipeline_stage_name(st);
  }
}

TEST_F(PipelineTest, DeletedOutputIsRebuilt) {
  run_all(cfg_);
  std::filesystem::remove(out(artifact::kTextModel));
  const auto s = skipped(run_all(cfg_));
  EXPECT_TRUE(s.at(Stage::kFeatures));
  EXPECT_FALSE(s.at(Stage::kTrainText));
  EXPECT_TRUE(std::filesystem::exists(out(artifact::kTextModel)));
}

TEST_F(PipelineTest, MissingUpstreamArtifact) {
  EXPECT_THROW(run_stage(Stage::kEvaluate, cfg_), MissingUpstreamArtifact);
  for (Stage st : {Stage::kIngest, Stage::kLabel, Stage::kSplit, Stage::kFeatures}) run_stage(st, cfg_);
  try {
    run_stage(Stage::kEvaluate, cfg_);
    FAIL() << "expected MissingUpstreamArtifact";
  } catch (const MissingUpstreamArtifact& e) {
    EXPECT_NE(std::string(e.what()).find("run '"), std::string::npos) << e.what();
  }
}

TEST_F(PipelineTest, TamperedCalibrationLineage) {
  run_all(cfg_);
  const std::string path = out(artifact::calibration("tabular"));
  std::string json = read_file(path);
  const std::string fp = partition_fingerprint(cfg_.output_dir, Partition::kVal);
  const auto pos = json.find(fp);
  ASSERT_NE(pos, std::string::npos);
  json.replace(pos, fp.size(), std::string(fp.size(), '0'));
  write_file(path, json);
  EXPECT_THROW(run_stage(Stage::kEvaluate, cfg_), FingerprintMismatch);
  EXPECT_THROW(run_stage(Stage::kStratify, cfg_), FingerprintMismatch);
}

TEST_F(PipelineTest, EmptyInputDirectory) {
  TempDir empty;
  cfg_.input_paths = {empty.str()};
  try {
    run_all(cfg_);
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.kind(), "EmptyDataset");
    EXPECT_EQ(e.stage(), "ingest");
    EXPECT_EQ(e.exit_code(), ExitCode::kData);
  }
}

TEST(PipelineStages, Names) {
  for (Stage s : all_stages()) EXPECT_EQ(pipeline_stage_from_name(pipeline_stage_name(s)), s);
  EXPECT_EQ(pipeline_stage_name(Stage::kTrainTabular), "train-tabular");
  EXPECT_THROW(pipeline_stage_from_name("deploy"), ConfigError);
}

}  // namespace
}  // namespace ctdr
