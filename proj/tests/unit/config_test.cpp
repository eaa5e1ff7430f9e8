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

#include <map>

#include "ctdr/config.hpp"
#include "ctdr/errors.hpp"

namespace ctdr {
namespace {

TEST(Config, Defaults) {
  const PipelineConfig cfg;
  EXPECT_EQ(get_config_value(cfg, "labels.wilson_threshold"), "1e-04");
  EXPECT_EQ(get_config_value(cfg, "input.cutoff"), "2025-09-01");
  EXPECT_EQ(get_config_value(cfg, "split.fractions"), "0.7,0.15,0.15");
  EXPECT_EQ(get_config_value(cfg, "tabular.search_trials"), "200");
  EXPECT_EQ(get_config_value(cfg, "calibration.tabular"), "isotonic");
  EXPECT_EQ(config_keys().size(), 21u);
  EXPECT_NO_THROW(validate_config(cfg));
}

TEST(Config, Parse) {
  const PipelineConfig cfg = parse_config(
      "# comment\n"
      "\n"
      "input.paths = a.ndjson, dir/\n"
      "labels.min_similarity = 0.85\n"
      "tabular.search_trials=12\n"
      "features.idf = plain\n"
      "stratify.boundaries = 0.01,0.03,0.2\n");
  EXPECT_EQ(cfg.input_paths, (std::vector<std::string>{"a.ndjson", "dir/"}));
  EXPECT_EQ(cfg.min_similarity, 0.85);
  EXPECT_EQ(cfg.search_trials, 12);
  EXPECT_EQ(cfg.text_features.idf, IdfConvention::kPlain);
  EXPECT_EQ(cfg.boundaries, (RiskBoundaries{0.01, 0.03, 0.2}));
  EXPECT_EQ(cfg.wilson_confidence, 0.95);
}

TEST(Config, RoundTrip) {
  PipelineConfig cfg;
  set_config_value(cfg, "text.l2", "0.003");
  set_config_value(cfg, "fusion.grid_step", "0.01");
  set_config_value(cfg, "calibration.fusion", "isotonic");
  set_config_value(cfg, "input.paths", "x.json");
  const PipelineConfig back = parse_config(config_to_string(cfg));
  EXPECT_EQ(config_to_string(back), config_to_string(cfg));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("no.such.key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("tabular.search_trials = many\n"), ConfigError);
  EXPECT_THROW(parse_config("labels.min_similarity = 0.9x\n"), ConfigError);
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_config("input.cutoff = 2025-13-01\n"), ConfigError);
  EXPECT_THROW(parse_config("calibration.text = beta\n"), ConfigError);
  EXPECT_THROW(parse_config("split.fractions = 0.5,0.5\n"), ConfigError);
}

TEST(Config, Validation) {
  EXPECT_THROW(validate_config(parse_config("split.fractions = 0.5,0.3,0.3\n")), ConfigError);
  EXPECT_THROW(validate_config(parse_config("features.text_dim = 1000\n")), ConfigError);
  EXPECT_THROW(validate_config(parse_config("fusion.grid_step = 0.6\n")), ConfigError);
  EXPECT_THROW(validate_config(parse_config("labels.wilson_confidence = 1\n")), ConfigError);
  EXPECT_THROW(validate_config(parse_config("stratify.boundaries = 0.1,0.05,0.2\n")), ConfigError);
}

TEST(Config, EnvironmentOverrides) {
  EXPECT_EQ(env_var_name("labels.wilson_threshold"), "CTDR_LABELS_WILSON_THRESHOLD");
  const std::map<std::string, std::string> env = {{"CTDR_LABELS_WILSON_THRESHOLD", "0.001"},
                                                  {"CTDR_TABULAR_SEED", "7"},
                                                  {"UNRELATED", "x"}};
  PipelineConfig cfg = parse_config("labels.wilson_threshold = 0.0005\ntabular.seed = 3\n");
  apply_env_overrides(cfg, [&](const std::string& name) -> std::optional<std::string> {
    const auto it = env.find(name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  });
  EXPECT_EQ(cfg.wilson_threshold, 0.001);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.search_trials, 200);

  PipelineConfig bad;
  EXPECT_THROW(apply_env_overrides(bad, [](const std::string& name) -> std::optional<std::string> {
                 if (name == "CTDR_TEXT_MAX_ITERS") return "lots";
                 return std::nullopt;
               }),
               ConfigError);
}

}  // namespace
}  // namespace ctdr
