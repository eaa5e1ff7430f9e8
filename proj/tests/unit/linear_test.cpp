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

#include <cmath>

#include "ctdr/common.hpp"
#include "ctdr/errors.hpp"
#include "ctdr/linear.hpp"
#include "ctdr/metrics.hpp"

namespace ctdr {
namespace {

TextMatrix random_sparse(std::size_t rows, std::size_t dim, SplitMix64& rng, double density = 0.4) {
  TextMatrix m;
  m.dim = dim;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    for (std::size_t c = 0; c < dim; ++c) {
      if (rng.bernoulli(density)) {
        idx.push_back(static_cast<std::uint32_t>(c));
        val.push_back(rng.uniform(-1.0, 1.0));
      }
    }
    m.push_row("r" + std::to_string(r), idx, val);
  }
  return m;
}

TEST(LogisticObjective, GradientMatchesFiniteDifferences) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 12));
    const std::size_t d = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const TextMatrix x = random_sparse(n, d, rng);
    Labels y(n);
    for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
    std::vector<double> params(d + 1);
    for (auto& p : params) p = rng.uniform(-2.0, 2.0);
    const double l2 = rng.uniform(0.0, 0.5);
    const double cw = rng.uniform(0.5, 4.0);
    const ObjectiveValue at = logistic_objective(x, y, params, l2, cw);
    for (std::size_t j = 0; j < params.size(); ++j) {
      const double h = 1e-5;
      auto shifted = params;
      shifted[j] += h;
      const double up = logistic_objective(x, y, shifted, l2, cw).loss;
      shifted[j] -= 2 * h;
      const double down = logistic_objective(x, y, shifted, l2, cw).loss;
      const double fd = (up - down) / (2 * h);
      EXPECT_NEAR(at.grad[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(LogisticObjective, ValueAtZero) {
  SplitMix64 rng(1);
  const TextMatrix x = random_sparse(4, 3, rng);
  const std::vector<double> zero(4, 0.0);
  EXPECT_NEAR(logistic_objective(x, Labels{1, 0, 0, 1}, zero, 0.3, 1.0).loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(logistic_objective(x, Labels{1, 0, 0, 1}, zero, 0.3, 3.0).loss, std::log(2.0) * (3 + 3 + 1 + 1) / 4.0,
              1e-15);
}

TEST(TrainLinear, IdenticalRowsBalanced) {
  TextMatrix x;
  x.dim = 4;
  const std::vector<std::uint32_t> idx = {0, 2};
  const std::vector<double> val = {0.6, 0.8};
  for (int i = 0; i < 6; ++i) x.push_row("r" + std::to_string(i), idx, val);
  const LinearModel m = train_linear(x, Labels{1, 0, 1, 0, 1, 0}, {});
  for (double w : m.weights) EXPECT_NEAR(w, 0.0, 1e-8);
  EXPECT_NEAR(m.intercept, 0.0, 1e-8);
}

TEST(TrainLinear, SeparableData) {
  SplitMix64 rng(2);
  TextMatrix x;
  x.dim = 16;
  Labels y;
  for (int i = 0; i < 60; ++i) {
    const int label = i % 2;
    const std::vector<std::uint32_t> idx = {static_cast<std::uint32_t>(label), static_cast<std::uint32_t>(2 + rng.uniform_int(0, 13))};
    const std::vector<double> val = {0.8, 0.6};
    x.push_row("r" + std::to_string(i), idx, val);
    y.push_back(label);
  }
  LinearConfig cfg;
  cfg.l2 = 1e-6;
  LinearTrace trace;
  const LinearModel m = train_linear(x, y, cfg, &trace);
  EXPECT_EQ(auc_roc(predict_proba(m, x), y), 1.0);
  ASSERT_FALSE(trace.losses.empty());
  for (std::size_t i = 1; i < trace.losses.size(); ++i) EXPECT_LE(trace.losses[i], trace.losses[i - 1]);
}

TEST(TrainLinear, StrongRegularizationGivesWeightedPrior) {
  SplitMix64 rng(3);
  const TextMatrix x = random_sparse(40, 5, rng);
  Labels y(40, 0);
  for (std::size_t i = 0; i < 10; ++i) y[i * 4] = 1;
  LinearConfig cfg;
  cfg.l2 = 1e8;
  cfg.class_weight_pos = 2.0;
  const LinearModel m = train_linear(x, y, cfg);
  for (double w : m.weights) EXPECT_NEAR(w, 0.0, 1e-6);
  const double prior = 2.0 * 10 / (2.0 * 10 + 30);
  for (double p : predict_proba(m, x)) EXPECT_NEAR(p, prior, 1e-5);
}

TEST(TrainLinear, Converges) {
  SplitMix64 rng(4);
  const TextMatrix x = random_sparse(80, 10, rng);
  Labels y(80);
  for (auto& v : y) v = rng.bernoulli(0.3) ? 1 : 0;
  LinearConfig cfg;
  cfg.l2 = 0.01;
  LinearTrace trace;
  const LinearModel m = train_linear(x, y, cfg, &trace);
  EXPECT_TRUE(trace.converged);
  std::vector<double> params = m.weights;
  params.push_back(m.intercept);
  const ObjectiveValue at = logistic_objective(x, y, params, cfg.l2, cfg.class_weight_pos);
  double norm = 0.0;
  for (double g : at.grad) norm += g * g;
  EXPECT_LT(std::sqrt(norm), cfg.tol * 10);
}

TEST(TrainLinear, Errors) {
  SplitMix64 rng(6);
  const TextMatrix x = random_sparse(3, 4, rng);
  EXPECT_THROW(train_linear(x, Labels{1, 1, 1}, {}), DegenerateLabels);
  EXPECT_THROW(train_linear(x, Labels{1, 0}, {}), DimensionMismatch);
}

TEST(LinearPredict, Examples) {
  TextMatrix x;
  x.dim = 3;
  const std::vector<std::uint32_t> idx = {1};
  const std::vector<double> val = {1.0};
  x.push_row("a", idx, val);
  x.push_row("b", {}, {});

  LinearModel zero;
  zero.dim = 3;
  zero.weights.assign(3, 0.0);
  for (double p : predict_proba(zero, x)) EXPECT_EQ(p, 0.5);

  LinearModel m = zero;
  m.weights[1] = std::log(3.0) - 0.25;
  m.intercept = 0.25;
  EXPECT_NEAR(predict_proba(m, x)[0], 0.75, 1e-15);

  LinearModel wrong = zero;
  wrong.dim = 4;
  wrong.weights.assign(4, 0.0);
  EXPECT_THROW(predict_proba(wrong, x), DimensionMismatch);
}

TEST(LinearModel, TextRoundTrip) {
  SplitMix64 rng(7);
  const TextMatrix x = random_sparse(30, 12, rng);
  Labels y(30);
  for (auto& v : y) v = rng.bernoulli(0.4) ? 1 : 0;
  LinearConfig cfg;
  cfg.class_weight_pos = 1.5;
  const LinearModel m = train_linear(x, y, cfg);
  const LinearModel back = linear_model_from_string(linear_model_to_string(m));
  EXPECT_EQ(back, m);
}

}  // namespace
}  // namespace ctdr
