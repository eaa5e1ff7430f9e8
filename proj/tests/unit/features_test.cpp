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

#include <algorithm>
#include <cmath>

#include "ctdr/errors.hpp"
#include "ctdr/features.hpp"

namespace ctdr {
namespace {

std::size_t column(const TabularMatrix& m, const std::string& name) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (m.columns[c].name == name) return c;
  }
  ADD_FAILURE() << "no column " << name;
  return 0;
}

FeatureRow text_row(const std::string& id, const std::string& summary) {
  FeatureRow r;
  r.nct_id = id;
  r.brief_summary = summary;
  r.conditions = "asthma";
  return r;
}

TEST(TabularMatrix, MultiHotPhases) {
  FeatureRow r;
  r.nct_id = "NCT00000001";
  r.phases = std::vector<Phase>{Phase::kPhase1, Phase::kPhase2};
  r.masking = Masking::kDouble;
  const auto m = build_tabular_matrix(std::vector<FeatureRow>{r});
  for (int id = 0; id < 6; ++id) {
    EXPECT_EQ(m.at(0, column(m, "phases_" + std::to_string(id))), (id == 2 || id == 3) ? 1.0 : 0.0);
  }
  EXPECT_EQ(m.at(0, column(m, "masking_2")), 1.0);
  EXPECT_EQ(m.at(0, column(m, "masking_0")), 0.0);
  EXPECT_EQ(m.at(0, column(m, "masking_missing")), 0.0);
  EXPECT_EQ(m.at(0, column(m, "primaryPurpose_missing")), 1.0);
  EXPECT_EQ(m.at(0, column(m, "primaryPurpose_0")), 0.0);
}

TEST(TabularMatrix, MissingPassThrough) {
  FeatureRow r;
  r.nct_id = "NCT00000001";
  r.healthy_volunteers = false;
  r.num_arms = 3;
  const auto m = build_tabular_matrix(std::vector<FeatureRow>{r});
  EXPECT_TRUE(m.is_missing(0, column(m, "oversightHasDmc")));
  EXPECT_EQ(m.at(0, column(m, "healthyVolunteers")), 0.0);
  EXPECT_EQ(m.at(0, column(m, "numArms")), 3.0);
  EXPECT_TRUE(m.is_missing(0, column(m, "enrollmentCount")));
  EXPECT_TRUE(m.is_missing(0, column(m, "phases_0")));
}

TEST(TabularMatrix, DeterministicRows) {
  FeatureRow a;
  a.nct_id = "NCT00000001";
  a.sex = Sex::kMale;
  a.enrollment_count = 40;
  FeatureRow b = a;
  b.nct_id = "NCT00000002";
  const auto m = build_tabular_matrix(std::vector<FeatureRow>{a, b});
  const auto r0 = m.row(0);
  const auto r1 = m.row(1);
  for (std::size_t c = 0; c < m.cols(); ++c) {
    EXPECT_TRUE(r0[c] == r1[c] || (std::isnan(r0[c]) && std::isnan(r1[c])));
  }
  EXPECT_EQ(m.columns, tabular_layout());
  EXPECT_THROW(build_tabular_matrix(std::vector<FeatureRow>{}), EmptyInput);
}

TEST(TabularMatrix, RoundTrip) {
  FeatureRow a;
  a.nct_id = "NCT00000001";
  a.sex = Sex::kMale;
  a.enrollment_count = 40;
  a.arm_group_types = std::vector<ArmGroupType>{ArmGroupType::kExperimental};
  FeatureRow b;
  b.nct_id = "NCT00000002";
  const auto m = build_tabular_matrix(std::vector<FeatureRow>{a, b});
  const auto back = tabular_from_string(tabular_to_string(m));
  EXPECT_EQ(back.row_ids, m.row_ids);
  EXPECT_EQ(back.columns, m.columns);
  ASSERT_EQ(back.values.size(), m.values.size());
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    EXPECT_TRUE(back.values[i] == m.values[i] || (std::isnan(back.values[i]) && std::isnan(m.values[i])));
  }
}

TEST(Tokenize, Rules) {
  EXPECT_EQ(tokenize("Hello, World-2x"), (std::vector<std::string>{"hello", "world", "2x"}));
  EXPECT_TRUE(tokenize("  ...  ").empty());
}

TEST(TextVectorizer, AllMissingRow) {
  FeatureRow empty;
  empty.nct_id = "NCT00000001";
  const TextVectorizerConfig cfg{1024, 2, IdfConvention::kSmooth};
  const TextFit fit = fit_text_vectorizer(std::vector<FeatureRow>{empty}, cfg);
  std::vector<std::uint32_t> expected;
  for (auto field : kTextFieldNames) expected.push_back(hash_bucket(field, kUnknownToken, cfg.dim));
  std::sort(expected.begin(), expected.end());
  expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
  const auto idx = fit.matrix.row_indices(0);
  EXPECT_EQ(std::vector<std::uint32_t>(idx.begin(), idx.end()), expected);
}

TEST(TextVectorizer, IdenticalTextIdenticalRows) {
  const std::vector<FeatureRow> rows = {text_row("A", "oral tablet twice daily"), text_row("B", "oral tablet twice daily"),
                                        text_row("C", "intravenous infusion")};
  const TextFit fit = fit_text_vectorizer(rows, {4096, 2, IdfConvention::kSmooth});
  const auto i0 = fit.matrix.row_indices(0);
  const auto i1 = fit.matrix.row_indices(1);
  const auto v0 = fit.matrix.row_values(0);
  const auto v1 = fit.matrix.row_values(1);
  EXPECT_TRUE(std::equal(i0.begin(), i0.end(), i1.begin(), i1.end()));
  EXPECT_TRUE(std::equal(v0.begin(), v0.end(), v1.begin(), v1.end()));
}

TEST(TextVectorizer, UbiquitousTokenVanishesUnderPlainIdf) {
  const std::vector<FeatureRow> rows = {text_row("A", "dose alpha"), text_row("B", "dose beta"),
                                        text_row("C", "dose gamma")};
  const TextFit fit = fit_text_vectorizer(rows, {1u << 16, 1, IdfConvention::kPlain});
  const auto bucket = hash_bucket("briefSummary", "dose", 1u << 16);
  EXPECT_EQ(fit.idf.idf(bucket), 0.0);
  for (std::size_t r = 0; r < fit.matrix.rows(); ++r) {
    const auto idx = fit.matrix.row_indices(r);
    const auto val = fit.matrix.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) EXPECT_FALSE(idx[k] == bucket && val[k] != 0.0);
  }
  const TextFit smooth = fit_text_vectorizer(rows, {1u << 16, 1, IdfConvention::kSmooth});
  EXPECT_DOUBLE_EQ(smooth.idf.idf(bucket), 1.0);
  EXPECT_DOUBLE_EQ(smooth.idf.idf(hash_bucket("briefSummary", "alpha", 1u << 16)), std::log(4.0 / 2.0) + 1.0);
}

TEST(TextVectorizer, RowsAreUnitNorm) {
  const std::vector<FeatureRow> rows = {text_row("A", "oral tablet twice daily in children"),
                                        text_row("B", "weekly subcutaneous injection"), text_row("C", "")};
  const TextFit fit = fit_text_vectorizer(rows, {1u << 12, 2, IdfConvention::kSmooth});
  for (std::size_t r = 0; r < fit.matrix.rows(); ++r) {
    double sq = 0.0;
    for (double v : fit.matrix.row_values(r)) sq += v * v;
    if (sq > 0.0) EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-9);
  }
}

TEST(TextVectorizer, TransformMatchesFit) {
  const std::vector<FeatureRow> rows = {text_row("A", "oral tablet"), text_row("B", "weekly injection")};
  const TextFit fit = fit_text_vectorizer(rows, {1u << 10, 2, IdfConvention::kSmooth});
  const TextMatrix again = transform_text(rows, fit.idf);
  EXPECT_EQ(again.row_ptr, fit.matrix.row_ptr);
  EXPECT_EQ(again.indices, fit.matrix.indices);
  EXPECT_EQ(again.values, fit.matrix.values);
  EXPECT_THROW(transform_text(rows, std::nullopt), MissingIdfStats);
}

TEST(TextVectorizer, ConfigChecks) {
  const std::vector<FeatureRow> rows = {text_row("A", "x")};
  EXPECT_THROW(fit_text_vectorizer(rows, {1000, 2, IdfConvention::kSmooth}), ConfigError);
  EXPECT_THROW(fit_text_vectorizer(rows, {1024, 0, IdfConvention::kSmooth}), ConfigError);
}

TEST(TextVectorizer, SerializationRoundTrip) {
  const std::vector<FeatureRow> rows = {text_row("A", "oral tablet"), text_row("B", "weekly injection")};
  const TextFit fit = fit_text_vectorizer(rows, {1u << 10, 2, IdfConvention::kPlain});
  EXPECT_EQ(idf_stats_from_json(idf_stats_to_json(fit.idf)), fit.idf);
  const TextMatrix back = text_matrix_from_string(text_matrix_to_string(fit.matrix));
  EXPECT_EQ(back.row_ids, fit.matrix.row_ids);
  EXPECT_EQ(back.dim, fit.matrix.dim);
  EXPECT_EQ(back.indices, fit.matrix.indices);
  EXPECT_EQ(back.values, fit.matrix.values);
}

}  // namespace
}  // namespace ctdr
