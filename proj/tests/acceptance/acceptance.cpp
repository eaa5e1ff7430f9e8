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

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit when any
// gating criterion fails. Set CTDR_REAL_CONFIG to a pipeline config to add a
// report-only run on real registry data.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "ctdr/calibration.hpp"
#include "ctdr/common.hpp"
#include "ctdr/config.hpp"
#include "ctdr/dataset.hpp"
#include "ctdr/errors.hpp"
#include "ctdr/gbdt.hpp"
#include "ctdr/labeler.hpp"
#include "ctdr/linear.hpp"
#include "ctdr/metrics.hpp"
#include "ctdr/pipeline.hpp"
#include "ctdr/split.hpp"
#include "ctdr/stratify.hpp"
#include "ctdr/synth.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace ctdr {
namespace {

using testing::TempDir;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Labels = std::vector<int>;

// ---------------------------------------------------------------------------

Outcome wilson_grid() {
  const double z = 1.959964;
  double worst = 0.0;
  std::string where;
  for (std::int64_t n = 1; n <= 200; ++n) {
    for (std::int64_t k = 0; k <= n; ++k) {
      const double d = std::abs(wilson_lower_bound(k, n, z) - oracle::wilson_lower(k, n, z));
      if (d > worst) {
        worst = d;
        where = fmt::format("k={} n={}", k, n);
      }
    }
  }
  return {worst <= 1e-10, fmt::format("20300 cells, max |diff| {:.2e} at {}", worst, where)};
}

StudyRecord single_arm(const std::string& id, std::int64_t n, std::int64_t k) {
  StudyRecord r = testing::make_study(id);
  r.event_groups = {{"EG000", "Arm A", n, n}};
  r.adverse_events.clear();
  if (k > 0) testing::add_event(r, "EG000", "Accidental overdose", k, n);
  testing::add_event(r, "EG000", "Headache", 1, n);
  return r;
}

Outcome label_boundary() {
  const DosingTermList terms = parse_term_list(sample_term_list());
  const WilsonParams params;
  const TrialAggregates none = aggregate_trial(single_arm("NCT00000001", 1000000, 0), terms, 0.9, params);
  if (none.label || none.wilson_lower != 0.0) return {false, "k=0 trial was labeled positive"};

  std::int64_t n = 1;
  while (wilson_lower_bound(1, n + 1, params.z()) > params.threshold) ++n;
  const TrialAggregates above = aggregate_trial(single_arm("NCT00000002", n, 1), terms, 0.9, params);
  const TrialAggregates below = aggregate_trial(single_arm("NCT00000003", n + 1, 1), terms, 0.9, params);
  if (!above.label || below.label) {
    return {false, fmt::format("k=1 flip expected between n={} and n={}", n, n + 1)};
  }

  TrialAggregates exact;
  exact.wilson_lower = params.threshold;
  const bool at = assign_label(exact, params);
  exact.wilson_lower = std::nextafter(params.threshold, 1.0);
  const bool over = assign_label(exact, params);
  return {!at && over, fmt::format("k=0 negative; k=1 flips between n={} (lb {:.3e}) and n={} (lb {:.3e}); "
                                   "lb == threshold negative",
                                   n, above.wilson_lower, n + 1, below.wilson_lower)};
}

Outcome isotonic_exhaustive() {
  SplitMix64 rng(2024);
  double worst = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 8));
    std::vector<double> s(n), t(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_int(0, 5)) / 5.0;
      t[i] = inst % 2 == 0 ? static_cast<double>(rng.bernoulli(0.5)) : rng.uniform();
      w[i] = inst % 3 == 0 ? 1.0 : rng.uniform(0.2, 3.0);
    }
    const IsotonicMap map = fit_isotonic(s, t, w);
    const std::vector<double> expect = oracle::exhaustive_isotonic(s, t, w);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(map(s[i]) - expect[i]));
  }
  return {worst <= 1e-9, fmt::format("1000 weighted instances, n <= 8, max |diff| {:.2e}", worst)};
}

Outcome auc_pairwise() {
  SplitMix64 rng(77);
  double worst = 0.0;
  for (int inst = 0; inst < 1000; ++inst) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 200));
    std::vector<double> p(n);
    Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = inst % 2 == 0 ? std::round(rng.uniform() * 20.0) / 20.0 : rng.uniform();
      y[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(auc_roc(p, y) - oracle::pairwise_auc(p, y)));
  }

  const std::array<std::function<double(double)>, 4> transforms = {
      [](double x) { return std::exp(3.0 * x); }, [](double x) { return x * x * x + x; },
      [](double x) { return std::log1p(x); }, [](double x) { return 1.0 / (1.0 + std::exp(-10.0 * (x - 0.5))); }};
  double worst_transform = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 200));
    std::vector<double> p(n);
    Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<double>(rng.uniform_int(0, 50)) / 50.0;
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    const double base = auc_roc(p, y);
    std::vector<double> q(n);
    std::transform(p.begin(), p.end(), q.begin(), transforms[static_cast<std::size_t>(inst) % transforms.size()]);
    worst_transform = std::max(worst_transform, std::abs(auc_roc(q, y) - base));
  }
  return {worst <= 1e-12 && worst_transform <= 1e-12,
          fmt::format("1000 instances max |diff| {:.2e}; 100 monotone transforms max |diff| {:.2e}", worst,
                      worst_transform)};
}

Outcome calibration_effect() {
  SplitMix64 rng(31);
  const std::size_t n = 50000;
  std::vector<double> fit_s, fit_p, hold_s;
  Labels fit_y, hold_y;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = rng.uniform();
    const int y = rng.bernoulli(p) ? 1 : 0;
    (i % 2 == 0 ? fit_s : hold_s).push_back(p * p);
    (i % 2 == 0 ? fit_y : hold_y).push_back(y);
  }
  const auto iso = fit_calibration(CalibrationMethod::kIsotonic, fit_s, fit_y, "fit-half");
  const auto platt = fit_calibration(CalibrationMethod::kPlatt, fit_s, fit_y, "fit-half");
  const double brier_raw = brier(hold_s, hold_y);
  const double brier_iso = brier(apply_calibration(iso, hold_s), hold_y);
  const double nll_raw = log_loss(hold_s, hold_y);
  const double nll_platt = log_loss(apply_calibration(platt, hold_s), hold_y);
  return {brier_iso <= brier_raw && nll_platt <= nll_raw,
          fmt::format("held-out Brier {:.4f} -> {:.4f} (isotonic); log loss {:.4f} -> {:.4f} (Platt)", brier_raw,
                      brier_iso, nll_raw, nll_platt)};
}

// ---------------------------------------------------------------------------

struct ReferenceRow {
  std::size_t trials;
  std::size_t events;
  double rate_pct;
  double rr;
};
using ReferenceTable = std::array<ReferenceRow, 4>;

constexpr std::array<double, 4> kGroupProbability = {0.01, 0.03, 0.07, 0.30};

void append_table(const ReferenceTable& t, std::vector<double>& p, Labels& y) {
  for (std::size_t g = 0; g < 4; ++g) {
    for (std::size_t i = 0; i < t[g].trials; ++i) {
      p.push_back(kGroupProbability[g]);
      y.push_back(i < t[g].events ? 1 : 0);
    }
  }
}

// Largest deviation of (rate in percent, relative risk) from the reference table.
std::pair<double, double> deviation(const StratTable& got, const ReferenceTable& want) {
  double rate = 0.0, rr = 0.0;
  for (std::size_t g = 0; g < 4; ++g) {
    if (got.rows[g].n_trials != want[g].trials || got.rows[g].n_events != want[g].events) return {INFINITY, INFINITY};
    rate = std::max(rate, std::abs(100.0 * got.rows[g].event_rate - want[g].rate_pct));
    rr = std::max(rr, std::abs(got.rows[g].relative_risk - want[g].rr));
  }
  return {rate, rr};
}

Outcome table_overall() {
  const ReferenceTable uncal = {{{401, 0, 0.00, 0.000}, {1773, 6, 0.34, 0.069}, {953, 8, 0.84, 0.171},
                                 {3191, 296, 9.28, 1.89}}};
  const ReferenceTable cal = {{{3547, 22, 0.62, 0.126}, {948, 26, 2.74, 0.559}, {738, 58, 7.86, 1.602},
                               {1085, 204, 18.80, 3.832}}};
  double rate = 0.0, rr = 0.0;
  for (const auto* t : {&uncal, &cal}) {
    std::vector<double> p;
    Labels y;
    append_table(*t, p, y);
    const auto [dr, drr] = deviation(stratification_table(p, y), *t);
    rate = std::max(rate, dr);
    rr = std::max(rr, drr);
  }
  return {rate <= 0.005 && rr <= 0.001,
          fmt::format("both panels: max rate dev {:.4f} pct points, max RR dev {:.4f}", rate, rr)};
}

Outcome table_subgroups() {
  const std::array<ReferenceTable, 3> stages = {{
      {{{642, 3, 0.47, 0.235}, {75, 1, 1.33, 0.672}, {50, 5, 10.00, 5.038}, {39, 7, 17.95, 9.042}}},
      {{{1853, 14, 0.76, 0.201}, {526, 15, 2.85, 0.758}, {352, 32, 9.09, 2.417}, {326, 54, 16.56, 4.403}}},
      {{{934, 5, 0.54, 0.070}, {344, 10, 2.91, 0.379}, {335, 21, 6.27, 0.817}, {719, 143, 19.89, 2.591}}},
  }};
  const std::array<ReferenceTable, 4> bins = {{
      {{{2535, 16, 0.63, 0.517}, {328, 5, 1.52, 1.248}, {124, 8, 6.45, 5.283}, {43, 8, 18.60, 15.236}}},
      {{{912, 4, 0.44, 0.099}, {421, 13, 3.09, 0.698}, {354, 32, 9.04, 2.042}, {301, 39, 12.96, 2.927}}},
      {{{92, 2, 2.17, 0.198}, {149, 8, 5.37, 0.488}, {191, 13, 6.81, 0.619}, {332, 61, 18.37, 1.671}}},
      {{{8, 0, 0.00, 0.000}, {50, 0, 0.00, 0.000}, {69, 5, 7.25, 0.385}, {409, 96, 23.47, 1.246}}},
  }};
  const std::array<Phase, 3> stage_phase = {Phase::kPhase1, Phase::kPhase2, Phase::kPhase3};
  const std::array<std::int64_t, 4> bin_enrollment = {30, 100, 300, 1000};

  std::vector<double> p;
  Labels y;
  std::vector<FeatureRow> rows;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    append_table(stages[s], p, y);
    FeatureRow row;
    row.phases = {stage_phase[s]};
    rows.resize(p.size(), row);
  }
  const SubgroupTables by_stage = subgroup_tables(p, y, rows, SubgroupKey::kStage);

  p.clear();
  y.clear();
  rows.clear();
  for (std::size_t b = 0; b < bins.size(); ++b) {
    append_table(bins[b], p, y);
    FeatureRow row;
    row.phases = {Phase::kPhase2};
    row.enrollment_count = bin_enrollment[b];
    rows.resize(p.size(), row);
  }
  const SubgroupTables by_bin = subgroup_tables(p, y, rows, SubgroupKey::kEnrollment);

  if (by_stage.tables.size() != 3 || by_bin.tables.size() != 4) return {false, "unexpected subgroup count"};
  double rate = 0.0, rr = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto [dr, drr] = deviation(by_stage.tables[s], stages[s]);
    rate = std::max(rate, dr);
    rr = std::max(rr, drr);
  }
  for (std::size_t b = 0; b < 4; ++b) {
    const auto [dr, drr] = deviation(by_bin.tables[b], bins[b]);
    rate = std::max(rate, dr);
    rr = std::max(rr, drr);
  }
  return {rate <= 0.01 && rr <= 0.01,
          fmt::format("3 stages + 4 enrollment bins: max rate dev {:.4f} pct points, max RR dev {:.4f}", rate, rr)};
}

Outcome monotone_stratification() {
  SplitMix64 rng(8);
  const std::array<double, 5> edges = {0.0, kDefaultBoundaries[0], kDefaultBoundaries[1],
                                       kDefaultBoundaries[2], 0.5};
  std::vector<double> p;
  Labels y;
  for (std::size_t g = 0; g < 4; ++g) {
    for (int i = 0; i < 10000; ++i) {
      const double v = rng.uniform(edges[g], edges[g + 1]);
      p.push_back(v);
      y.push_back(rng.bernoulli(v) ? 1 : 0);
    }
  }
  const StratTable t = stratification_table(p, y);
  bool ok = true;
  std::string rates;
  for (std::size_t g = 0; g < 4; ++g) {
    const double r = t.rows[g].event_rate;
    ok = ok && t.rows[g].n_trials == 10000 && r >= edges[g] && r < edges[g + 1];
    if (g > 0) ok = ok && r > t.rows[g - 1].event_rate;
    rates += fmt::format("{}{:.4f}", g ? " < " : "", r);
  }
  return {ok, "rates " + rates + " each inside its interval"};
}

// ---------------------------------------------------------------------------

TabularMatrix tabular(const std::vector<std::string>& names, const std::vector<std::vector<double>>& rows) {
  TabularMatrix m;
  for (const auto& n : names) m.columns.push_back({n, ColumnKind::kNumeric});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.row_ids.push_back("r" + std::to_string(r));
    m.values.insert(m.values.end(), rows[r].begin(), rows[r].end());
  }
  return m;
}

Outcome gbdt_behaviour() {
  std::vector<std::vector<double>> rows;
  Labels y;
  const std::array<int, 4> cells = {10, 11, 9, 10};
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < cells[static_cast<std::size_t>(c)]; ++i) {
      rows.push_back({static_cast<double>(c >> 1), static_cast<double>(c & 1)});
      y.push_back((c >> 1) ^ (c & 1));
    }
  }
  const TabularMatrix xor_x = tabular({"a", "b"}, rows);
  TrainConfig cfg;
  cfg.n_estimators = 20;
  cfg.max_depth = 2;
  const double auc2 = auc_roc(predict_proba(train_gbdt(xor_x, y, cfg), xor_x), y);
  cfg.max_depth = 1;
  const double auc1 = auc_roc(predict_proba(train_gbdt(xor_x, y, cfg), xor_x), y);

  SplitMix64 rng(12);
  rows.clear();
  y.clear();
  for (int i = 0; i < 400; ++i) {
    std::vector<double> r(5);
    for (auto& v : r) v = rng.bernoulli(0.1) ? NAN : rng.uniform(-1.0, 1.0);
    const double signal = (std::isnan(r[0]) ? 0.5 : r[0]) + 0.5 * (std::isnan(r[1]) ? 0.0 : r[1] * r[2]);
    rows.push_back(r);
    y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-3.0 * signal))) ? 1 : 0);
  }
  const TabularMatrix x = tabular({"f0", "f1", "f2", "f3", "f4"}, rows);
  cfg = TrainConfig{};
  cfg.n_estimators = 50;
  cfg.max_depth = 4;
  cfg.learning_rate = 0.3;
  const Ensemble full = train_gbdt(x, y, cfg);
  Ensemble partial = full;
  partial.trees.clear();
  double prev = log_loss(predict_proba(partial, x), y);
  bool monotone = true;
  for (const auto& t : full.trees) {
    partial.trees.push_back(t);
    const double loss = log_loss(predict_proba(partial, x), y);
    monotone = monotone && loss <= prev + 1e-12;
    prev = loss;
  }

  cfg.subsample = 0.7;
  cfg.colsample_bytree = 0.6;
  cfg.seed = 5;
  const bool identical = ensemble_to_json(train_gbdt(x, y, cfg)) == ensemble_to_json(train_gbdt(x, y, cfg));
  return {auc2 == 1.0 && auc1 <= 0.75 && monotone && identical,
          fmt::format("XOR AUC depth2 {:.3f} depth1 {:.3f}; training loss non-increasing: {}; "
                      "same seed byte-identical: {}",
                      auc2, auc1, monotone, identical)};
}

Outcome gradient_check() {
  SplitMix64 rng(99);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 30));
    const auto d = static_cast<std::size_t>(rng.uniform_int(1, 12));
    TextMatrix x;
    x.dim = d;
    Labels y(n);
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<std::uint32_t> idx;
      std::vector<double> val;
      for (std::size_t c = 0; c < d; ++c) {
        if (rng.bernoulli(0.4)) {
          idx.push_back(static_cast<std::uint32_t>(c));
          val.push_back(rng.uniform(-1.0, 1.0));
        }
      }
      x.push_row("r" + std::to_string(r), idx, val);
      y[r] = rng.bernoulli(0.4) ? 1 : 0;
    }
    std::vector<double> params(d + 1);
    for (auto& v : params) v = rng.uniform(-1.5, 1.5);
    const double l2 = rng.uniform(0.0, 0.5);
    const double cw = rng.uniform(0.5, 5.0);
    const ObjectiveValue at = logistic_objective(x, y, params, l2, cw);
    double diff = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < params.size(); ++j) {
      const double h = 1e-5;
      auto shifted = params;
      shifted[j] += h;
      const double up = logistic_objective(x, y, shifted, l2, cw).loss;
      shifted[j] -= 2 * h;
      const double down = logistic_objective(x, y, shifted, l2, cw).loss;
      const double fd = (up - down) / (2 * h);
      diff += (at.grad[j] - fd) * (at.grad[j] - fd);
      norm += (std::abs(at.grad[j]) + std::abs(fd)) * (std::abs(at.grad[j]) + std::abs(fd));
    }
    worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12));
  }
  return {worst < 1e-6, fmt::format("50 instances, max relative error {:.2e}", worst)};
}

// ---------------------------------------------------------------------------

std::string nct(std::size_t i) { return fmt::format("NCT{:08}", i); }

DatasetEntry entry(const std::string& id, Date start, Date completion, std::int64_t enrollment) {
  StudyRecord r = testing::make_study(id);
  r.start_date = start;
  r.completion_date = completion;
  r.design.enrollment_count = enrollment;
  DatasetEntry e;
  e.study = r;
  e.features = extract_features(r);
  e.aux = extract_auxiliary(r);
  return e;
}

Date day_offset(int days) { return Date{std::chrono::sys_days{testing::date("2000-01-01")} + std::chrono::days{days}}; }

Outcome split_correctness() {
  SplitMix64 rng(4);
  Dataset ds;
  const std::size_t n = 997;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.uniform_int(0, 3000));
    ds.entries.push_back(entry(nct(i), day_offset(0), day_offset(c), 100));
  }
  const SplitAssignment split = chronological_split(ds);
  std::map<std::string, Date> completion;
  for (const auto& e : ds.entries) completion[e.nct_id()] = *e.study.completion_date;
  bool ordered = true;
  for (std::size_t i = 1; i < split.rows.size(); ++i) {
    const auto& [a, pa] = split.rows[i - 1];
    const auto& [b, pb] = split.rows[i];
    ordered = ordered && std::make_pair(completion[a], a) < std::make_pair(completion[b], b) &&
              static_cast<int>(pa) <= static_cast<int>(pb);
  }
  const bool sizes = split.count(Partition::kTrain) == 697 && split.count(Partition::kVal) == 149 &&
                     split.count(Partition::kTest) == 151 && split.rows.size() == n;

  // Long trials enroll more and start earlier; short ones start late.
  Dataset shifted;
  const int horizon = 20 * 365;
  for (std::size_t i = 0; i < 2000; ++i) {
    const bool large = rng.bernoulli(0.5);
    const int start = static_cast<int>(rng.uniform_int(0, horizon));
    const int duration = large ? 8 * 365 : 365;
    if (start + duration > horizon) continue;
    const std::int64_t enrollment = large ? rng.uniform_int(300, 2000) : rng.uniform_int(10, 120);
    shifted.entries.push_back(entry(nct(i), day_offset(start), day_offset(start + duration), enrollment));
  }
  const double ks_completion = shift_diagnostic(chronological_split(shifted), shifted, "enrollmentCount").train_test;
  const double ks_initiation = shift_diagnostic(initiation_split(shifted), shifted, "enrollmentCount").train_test;
  return {ordered && sizes && ks_completion < ks_initiation,
          fmt::format("997 trials split 697/149/151 in completion order: {}; enrollment KS train-test "
                      "completion-ordered {:.3f} < start-ordered {:.3f}",
                      ordered && sizes, ks_completion, ks_initiation)};
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::string>> read_tsv(const std::string& path) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    out.push_back(std::move(cells));
  }
  return out;
}

std::map<std::string, double> auc_by_variant(const std::string& out_dir) {
  std::map<std::string, double> auc;
  const auto rows = read_tsv((std::filesystem::path(out_dir) / artifact::kMetricsTsv).string());
  for (std::size_t i = 1; i < rows.size(); ++i) auc[rows[i][1] + "/" + rows[i][2]] = std::stod(rows[i][3]);
  return auc;
}

Outcome end_to_end() {
  TempDir dir;
  write_synthetic_corpus(SynthConfig{}, dir.str());
  PipelineConfig cfg = parse_config(read_file(dir.file("ctdr.conf")));
  cfg.output_dir = dir.file("out");
  run_all(cfg);

  const auto auc = auc_by_variant(cfg.output_dir);
  const double fused_test = auc.at("fusion_cal/test");
  const double fused_val = auc.at("fusion_cal/val");
  const double best_single = std::max(auc.at("tabular_cal/val"), auc.at("text_cal/val"));

  const auto strat = read_tsv((std::filesystem::path(cfg.output_dir) / artifact::kStratification).string());
  std::vector<double> rates;
  std::string counts;
  for (std::size_t i = 1; i < strat.size(); ++i) {
    rates.push_back(std::stod(strat[i][4]));
    counts += fmt::format("{}{}/{}", i > 1 ? " " : "", strat[i][3], strat[i][2]);
  }
  bool monotone = rates.size() == 4;
  for (std::size_t g = 1; g < rates.size(); ++g) monotone = monotone && rates[g] > rates[g - 1];
  return {fused_test >= 0.85 && monotone && fused_val >= best_single - 0.01,
          fmt::format("synthetic corpus (2000 docs): fused test AUC {:.3f}; events by group {} increasing: {}; "
                      "val AUC fused {:.3f} vs best single {:.3f}",
                      fused_test, counts, monotone, fused_val, best_single)};
}

Outcome leakage_guards() {
  TempDir dir;
  SynthConfig synth;
  synth.n_trials = 200;
  synth.seed = 7;
  write_synthetic_corpus(synth, dir.str());
  PipelineConfig cfg = parse_config(read_file(dir.file("ctdr.conf")));
  cfg.output_dir = dir.file("out");
  cfg.search_trials = 2;
  cfg.text_features.dim = 4096;
  run_all(cfg);

  const auto path = [&](std::string_view rel) { return (std::filesystem::path(cfg.output_dir) / rel).string(); };
  const std::vector<std::string> fitted = {std::string(artifact::kIdf),          std::string(artifact::kTabularModel),
                                           std::string(artifact::kTextModel),    std::string(artifact::kFusionModel),
                                           artifact::calibration("tabular"),     artifact::calibration("text"),
                                           artifact::calibration("fusion")};
  std::map<std::string, std::string> before;
  for (const auto& f : fitted) before[f] = read_file(path(f));
  const std::string test_labels = read_file(path(artifact::labels(Partition::kTest)));

  // Rewrite every test-partition trial: flipped label and replaced text.
  const SplitAssignment split = split_from_string(read_file(path(artifact::kSplit)));
  Dataset labeled = dataset_from_string(read_file(path(artifact::kLabeled)));
  std::size_t touched = 0;
  for (auto& e : labeled.entries) {
    if (split.partition_of(e.nct_id()) != Partition::kTest) continue;
    e.aux.label = !e.aux.label.value_or(false);
    e.features.brief_summary = "accidental overdose wrong dose leaked " + e.nct_id();
    e.features.conditions = "leak";
    ++touched;
  }
  write_file(path(artifact::kLabeled), dataset_to_string(labeled));
  for (Stage s : {Stage::kFeatures, Stage::kTrainTabular, Stage::kTrainText, Stage::kCalibrate, Stage::kFuse}) {
    run_stage(s, cfg);
  }
  std::size_t changed = 0;
  std::string which;
  for (const auto& f : fitted) {
    if (read_file(path(f)) != before[f]) {
      ++changed;
      which += " " + f;
    }
  }

  const bool labels_moved = read_file(path(artifact::labels(Partition::kTest))) != test_labels;

  bool mismatch = false;
  std::string json = read_file(path(artifact::calibration("text")));
  const std::string fp = partition_fingerprint(cfg.output_dir, Partition::kVal);
  const auto pos = json.find(fp);
  if (pos != std::string::npos) {
    json.replace(pos, fp.size(), std::string(fp.size(), 'f'));
    write_file(path(artifact::calibration("text")), json);
    try {
      run_stage(Stage::kEvaluate, cfg);
    } catch (const FingerprintMismatch&) {
      mismatch = true;
    }
  }
  return {touched > 0 && labels_moved && changed == 0 && mismatch,
          fmt::format("{} test trials rewritten (test labels changed: {}), {}/{} fitted artifacts changed{}; tampered lineage rejected: {}",
                      touched, labels_moved, changed, fitted.size(), which, mismatch)};
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* name;
  Outcome (*run)();
};

constexpr std::array<Criterion, 13> kCriteria = {{
    {"wilson-bound-grid", wilson_grid},
    {"label-threshold-boundary", label_boundary},
    {"isotonic-vs-exhaustive", isotonic_exhaustive},
    {"auc-vs-pairwise", auc_pairwise},
    {"calibration-improves-heldout", calibration_effect},
    {"stratification-overall-table", table_overall},
    {"stratification-subgroup-tables", table_subgroups},
    {"stratification-monotone", monotone_stratification},
    {"gbdt-behaviour", gbdt_behaviour},
    {"text-gradient-check", gradient_check},
    {"temporal-split", split_correctness},
    {"end-to-end-synthetic", end_to_end},
    {"leakage-guards", leakage_guards},
}};

void real_data_report() {
  const char* conf = std::getenv("CTDR_REAL_CONFIG");
  if (conf == nullptr || *conf == '\0') {
    std::printf("SKIP  real-data-smoke (set CTDR_REAL_CONFIG to a pipeline config)\n");
    return;
  }
  try {
    const PipelineConfig cfg = parse_config(read_file(conf));
    run_all(cfg);
    const auto auc = auc_by_variant(cfg.output_dir);
    std::printf("INFO  real-data-smoke  fused test AUC %.3f, tabular %.3f, text %.3f (report only)\n",
                auc.at("fusion_cal/test"), auc.at("tabular_cal/test"), auc.at("text_cal/test"));
  } catch (const std::exception& e) {
    std::printf("INFO  real-data-smoke  failed: %s (report only)\n", e.what());
  }
}

}  // namespace
}  // namespace ctdr

int main() {
  spdlog::set_level(spdlog::level::off);
  int failed = 0;
  for (const auto& c : ctdr::kCriteria) {
    const auto start = std::chrono::steady_clock::now();
    ctdr::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %-32s %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  ctdr::real_data_report();
  std::printf("%zu criteria, %d failed\n", ctdr::kCriteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
