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

#include "ctdr/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ctdr/calibration.hpp"
#include "ctdr/dataset.hpp"
#include "ctdr/errors.hpp"
#include "ctdr/features.hpp"
#include "ctdr/gbdt.hpp"
#include "ctdr/labeler.hpp"
#include "ctdr/linear.hpp"
#include "ctdr/metrics.hpp"
#include "ctdr/stratify.hpp"

namespace ctdr {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::array<Partition, 3> kPartitions = {Partition::kTrain, Partition::kVal, Partition::kTest};
constexpr std::array<std::string_view, 3> kModels = {"tabular", "text", "fusion"};
constexpr std::array<std::string_view, 6> kVariants = {"tabular_raw", "tabular_cal", "text_raw",
                                                       "text_cal",    "fusion_raw",  "fusion_cal"};

std::string_view variant_title(std::string_view v) {
  static const std::map<std::string_view, std::string_view> kTitles = {
      {"tabular_raw", "Tabular (uncal.)"}, {"tabular_cal", "Tabular"},
      {"text_raw", "Text (uncal.)"},       {"text_cal", "Text"},
      {"fusion_raw", "LateFusion (uncal.)"}, {"fusion_cal", "LateFusion"}};
  return kTitles.at(v);
}

// Paths and checks rooted at the output directory.
class Workspace {
 public:
  explicit Workspace(std::string dir) : dir_(std::move(dir)) {}

  std::string path(std::string_view rel) const { return (fs::path(dir_) / std::string(rel)).string(); }
  bool exists(std::string_view rel) const { return fs::is_regular_file(path(rel)); }

  std::string read(std::string_view rel, Stage producer) const {
    if (!exists(rel)) {
      throw MissingUpstreamArtifact(std::string(rel) + " not found; run '" +
                                    std::string(pipeline_stage_name(producer)) + "' first");
    }
    return read_file(path(rel));
  }

  void write(std::string_view rel, std::string_view contents, std::vector<std::string>& outputs) const {
    write_file(path(rel), contents);
    outputs.emplace_back(rel);
  }

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

std::string hash_bytes(std::string_view bytes) { return Fingerprint().add(bytes).hex(); }

std::string labels_to_tsv(const std::vector<std::string>& ids, const Labels& y) {
  std::string out = "nct_id\tlabel\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + '\t' + std::to_string(y[i]) + '\n';
  return out;
}

struct LabeledIds {
  std::vector<std::string> ids;
  Labels y;
};

LabeledIds labels_from_tsv(const std::string& text) {
  LabeledIds out;
  bool header = true;
  for (const auto& line : split_string(text, '\n')) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cols = split_string(line, '\t');
    if (cols.size() != 2 || (cols[1] != "0" && cols[1] != "1")) throw MalformedDocument("bad labels line: " + line);
    out.ids.push_back(cols[0]);
    out.y.push_back(cols[1] == "1" ? 1 : 0);
  }
  return out;
}

std::string predictions_to_tsv(const std::vector<std::string>& ids, const std::vector<double>& p) {
  std::string out = "nct_id\tp\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + '\t' + format_double(p[i]) + '\n';
  return out;
}

struct Scored {
  std::vector<std::string> ids;
  std::vector<double> p;
};

Scored predictions_from_tsv(const std::string& text) {
  Scored out;
  bool header = true;
  for (const auto& line : split_string(text, '\n')) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cols = split_string(line, '\t');
    if (cols.size() != 2) throw MalformedDocument("bad predictions line: " + line);
    out.ids.push_back(cols[0]);
    out.p.push_back(std::stod(cols[1]));
  }
  return out;
}

std::vector<double> aligned(Scored s, const LabeledIds& l) {
  if (s.ids != l.ids) throw ConstraintViolation("prediction rows do not match the partition's labels; rerun upstream");
  return std::move(s.p);
}

Json parse_json(const std::string& text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw MalformedDocument(std::string(what) + " is not JSON: " + e.what());
  }
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg) : cfg_(cfg), ws_(cfg.output_dir) {}

  std::vector<std::string> run(Stage s) {
    std::vector<std::string> out;
    switch (s) {
      case Stage::kIngest: ingest(out); break;
      case Stage::kLabel: label(out); break;
      case Stage::kSplit: split(out); break;
      case Stage::kFeatures: features(out); break;
      case Stage::kTrainTabular: train_tabular(out); break;
      case Stage::kTrainText: train_text(out); break;
      case Stage::kCalibrate: calibrate(out); break;
      case Stage::kFuse: fuse_stage(out); break;
      case Stage::kEvaluate: evaluate(out); break;
      case Stage::kStratify: stratify(out); break;
    }
    return out;
  }

 private:
  LabeledIds labels_of(Partition p) const {
    return labels_from_tsv(ws_.read(artifact::labels(p), Stage::kFeatures));
  }

  Scored scored(std::string_view variant, Partition p) const {
    const Stage producer = variant.starts_with("fusion")    ? Stage::kFuse
                           : variant.ends_with("_cal")     ? Stage::kCalibrate
                           : variant.starts_with("tabular") ? Stage::kTrainTabular
                                                            : Stage::kTrainText;
    return predictions_from_tsv(ws_.read(artifact::predictions(variant, p), producer));
  }

  std::vector<double> preds(std::string_view variant, Partition p, const LabeledIds& l) const {
    return aligned(scored(variant, p), l);
  }

  Calibration calibration_checked(std::string_view model, const std::string& val_fp) const {
    Calibration cal = calibration_from_json(
        ws_.read(artifact::calibration(model), model == "fusion" ? Stage::kFuse : Stage::kCalibrate));
    if (cal.fitted_on != val_fp) {
      throw FingerprintMismatch(std::string(model) + " calibration was fitted on " + cal.fitted_on +
                                ", not the current validation split " + val_fp);
    }
    return cal;
  }

  void check_fusion_lineage(const std::string& val_fp) const {
    const Json fusion = parse_json(ws_.read(artifact::kFusionModel, Stage::kFuse), "fusion model");
    if (fusion.value("fitted_on", "") != val_fp) {
      throw FingerprintMismatch("fusion weight was not fitted on the current validation split");
    }
  }

  void ingest(std::vector<std::string>& out) {
    if (cfg_.input_paths.empty()) throw ConfigError("input.paths is empty");
    IngestResult r = ingest_corpus(cfg_.input_paths, cfg_.cutoff);
    std::string log = "source\terror\n";
    for (const auto& rej : r.log.rejected) log += rej.source + '\t' + rej.error + '\n';
    ws_.write(artifact::kIngestLog, log, out);
    if (r.dataset.empty()) {
      throw EmptyDataset("no trial in the input passed the inclusion criteria (" + std::to_string(r.log.parsed) +
                         " parsed, " + std::to_string(r.log.rejected.size()) + " rejected)");
    }
    ws_.write(artifact::kDataset, dataset_to_string(r.dataset), out);
  }

  void label(std::vector<std::string>& out) {
    if (cfg_.term_list.empty()) throw ConfigError("labels.term_list is not set");
    const Dataset ds = dataset_from_string(ws_.read(artifact::kDataset, Stage::kIngest));
    const DosingTermList terms = load_term_list(cfg_.term_list);
    LabelingParams params;
    params.min_similarity = cfg_.min_similarity;
    params.wilson.confidence = cfg_.wilson_confidence;
    params.wilson.threshold = cfg_.wilson_threshold;
    const LabelingResult r = label_dataset(ds, terms, params);
    if (r.labeled.empty()) throw EmptyDataset("no trial has an at-risk population");
    ws_.write(artifact::kLabeled, dataset_to_string(r.labeled), out);
    ws_.write(artifact::kLabelReport, label_report_to_json(r.report), out);
    spdlog::info("label: {} trials, {} positive ({:.2f}%)", r.report.total, r.report.positives,
                 100.0 * r.report.prevalence);
  }

  void split(std::vector<std::string>& out) {
    const Dataset ds = dataset_from_string(ws_.read(artifact::kLabeled, Stage::kLabel));
    const SplitAssignment s = chronological_split(ds, cfg_.fractions);
    ws_.write(artifact::kSplit, split_to_string(s), out);
    std::string shift = "feature\ttrain_val\ttrain_test\tval_test\n";
    for (const char* f : {"enrollmentCount", "numArms", "numInterventions", "numLocations"}) {
      try {
        const ShiftDiagnostic d = shift_diagnostic(s, ds, f);
        shift += d.feature + '\t' + format_double(d.train_val) + '\t' + format_double(d.train_test) + '\t' +
                 format_double(d.val_test) + '\n';
      } catch (const InsufficientSamples&) {
        shift += std::string(f) + "\tNA\tNA\tNA\n";
      }
    }
    ws_.write(artifact::kShift, shift, out);
    spdlog::info("split: train {}, val {}, test {}", s.count(Partition::kTrain), s.count(Partition::kVal),
                 s.count(Partition::kTest));
  }

  void features(std::vector<std::string>& out) {
    const Dataset ds = dataset_from_string(ws_.read(artifact::kLabeled, Stage::kLabel));
    const SplitAssignment s = split_from_string(ws_.read(artifact::kSplit, Stage::kSplit));
    std::map<std::string, const DatasetEntry*> by_id;
    for (const auto& e : ds.entries) by_id[e.nct_id()] = &e;

    std::array<std::vector<FeatureRow>, 3> rows;
    std::array<std::vector<std::string>, 3> ids;
    std::array<Labels, 3> y;
    for (std::size_t k = 0; k < 3; ++k) {
      for (const auto& id : s.ids(kPartitions[k])) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ConstraintViolation("split lists " + id + ", absent from the labeled dataset");
        if (!it->second->aux.label) throw ConstraintViolation(id + " has no label");
        rows[k].push_back(it->second->features);
        ids[k].push_back(id);
        y[k].push_back(*it->second->aux.label ? 1 : 0);
      }
    }
    // Only training text shapes the vocabulary statistics.
    TextFit fit = fit_text_vectorizer(rows[0], cfg_.text_features);
    ws_.write(artifact::kIdf, idf_stats_to_json(fit.idf), out);
    for (std::size_t k = 0; k < 3; ++k) {
      const Partition p = kPartitions[k];
      ws_.write(artifact::tabular_matrix(p), tabular_to_string(build_tabular_matrix(rows[k])), out);
      const TextMatrix text = k == 0 ? std::move(fit.matrix) : transform_text(rows[k], fit.idf);
      ws_.write(artifact::text_matrix(p), text_matrix_to_string(text), out);
      ws_.write(artifact::labels(p), labels_to_tsv(ids[k], y[k]), out);
    }
  }

  void train_tabular(std::vector<std::string>& out) {
    std::array<TabularMatrix, 3> x;
    for (std::size_t k = 0; k < 3; ++k) {
      x[k] = tabular_from_string(ws_.read(artifact::tabular_matrix(kPartitions[k]), Stage::kFeatures));
    }
    const LabeledIds train = labels_of(Partition::kTrain);
    const LabeledIds val = labels_of(Partition::kVal);
    const SearchResult search =
        random_search(SearchSpace{}, cfg_.search_trials, cfg_.seed, x[0], train.y, x[1], val.y);
    spdlog::info("train-tabular: best validation AUC {:.4f} over {} trials", search.best_auc, search.trace.size());
    const Ensemble model = train_gbdt(x[0], train.y, search.best);
    ws_.write(artifact::kSearchTrace, search_trace_to_tsv(search), out);
    ws_.write(artifact::kTabularModel, ensemble_to_json(model), out);
    for (std::size_t k = 0; k < 3; ++k) {
      ws_.write(artifact::predictions("tabular_raw", kPartitions[k]),
                predictions_to_tsv(x[k].row_ids, predict_proba(model, x[k])), out);
    }
  }

  void train_text(std::vector<std::string>& out) {
    std::array<TextMatrix, 3> x;
    for (std::size_t k = 0; k < 3; ++k) {
      x[k] = text_matrix_from_string(ws_.read(artifact::text_matrix(kPartitions[k]), Stage::kFeatures));
    }
    const LabeledIds train = labels_of(Partition::kTrain);
    const auto pos = static_cast<double>(std::count(train.y.begin(), train.y.end(), 1));
    if (pos == 0 || pos == static_cast<double>(train.y.size())) {
      throw DegenerateLabels("training labels contain a single class");
    }
    LinearConfig lc = cfg_.text_model;
    lc.class_weight_pos = (static_cast<double>(train.y.size()) - pos) / pos;
    LinearTrace trace;
    const LinearModel model = train_linear(x[0], train.y, lc, &trace);
    spdlog::info("train-text: {} iterations, final loss {:.6f}{}", trace.iterations, trace.losses.back(),
                 trace.converged ? "" : " (not converged)");
    ws_.write(artifact::kTextModel, linear_model_to_string(model), out);
    for (std::size_t k = 0; k < 3; ++k) {
      ws_.write(artifact::predictions("text_raw", kPartitions[k]),
                predictions_to_tsv(x[k].row_ids, predict_proba(model, x[k])), out);
    }
  }

  void calibrate(std::vector<std::string>& out) {
    const std::string val_fp = partition_fingerprint(cfg_.output_dir, Partition::kVal);
    const LabeledIds val = labels_of(Partition::kVal);
    const std::array<std::pair<std::string_view, CalibrationMethod>, 2> models = {
        std::pair{std::string_view("tabular"), cfg_.calibration_tabular},
        std::pair{std::string_view("text"), cfg_.calibration_text}};
    for (const auto& [model, method] : models) {
      const std::string raw = std::string(model) + "_raw";
      const Calibration cal = fit_calibration(method, preds(raw, Partition::kVal, val), val.y, val_fp);
      ws_.write(artifact::calibration(model), calibration_to_json(cal), out);
      for (Partition p : kPartitions) {
        const Scored s = scored(raw, p);
        ws_.write(artifact::predictions(std::string(model) + "_cal", p),
                  predictions_to_tsv(s.ids, apply_calibration(cal, s.p)), out);
      }
    }
  }

  void fuse_stage(std::vector<std::string>& out) {
    const std::string val_fp = partition_fingerprint(cfg_.output_dir, Partition::kVal);
    const LabeledIds val = labels_of(Partition::kVal);
    const FusionWeight fw = optimize_weight(preds("tabular_raw", Partition::kVal, val),
                                            preds("text_raw", Partition::kVal, val), val.y, cfg_.fusion_grid_step);
    spdlog::info("fuse: w = {} (validation AUC {:.4f})", fw.w, fw.val_auc);
    Json model;
    model["schema"] = "ctdr.fusion";
    model["version"] = 1;
    model["w"] = fw.w;
    model["val_auc"] = fw.val_auc;
    model["grid_step"] = cfg_.fusion_grid_step;
    model["fitted_on"] = val_fp;
    ws_.write(artifact::kFusionModel, model.dump(1) + "\n", out);
    std::string trace = "w\tval_auc\n";
    for (const auto& [w, auc] : fw.trace) trace += format_double(w) + '\t' + format_double(auc) + '\n';
    ws_.write(artifact::kFusionTrace, trace, out);

    std::array<std::vector<double>, 3> fused;
    std::array<std::vector<std::string>, 3> ids;
    for (std::size_t k = 0; k < 3; ++k) {
      const Scored tab = scored("tabular_raw", kPartitions[k]);
      const Scored text = scored("text_raw", kPartitions[k]);
      if (tab.ids != text.ids) throw ConstraintViolation("tabular and text predictions cover different rows");
      ids[k] = tab.ids;
      fused[k] = fuse(tab.p, text.p, fw.w);
      ws_.write(artifact::predictions("fusion_raw", kPartitions[k]), predictions_to_tsv(ids[k], fused[k]), out);
    }
    const Calibration cal = fit_calibration(cfg_.calibration_fusion, fused[1], val.y, val_fp);
    ws_.write(artifact::calibration("fusion"), calibration_to_json(cal), out);
    for (std::size_t k = 0; k < 3; ++k) {
      ws_.write(artifact::predictions("fusion_cal", kPartitions[k]),
                predictions_to_tsv(ids[k], apply_calibration(cal, fused[k])), out);
    }
  }

  void evaluate(std::vector<std::string>& out) {
    const std::string val_fp = partition_fingerprint(cfg_.output_dir, Partition::kVal);
    for (std::string_view m : kModels) calibration_checked(m, val_fp);
    check_fusion_lineage(val_fp);
    const LabeledIds val = labels_of(Partition::kVal);
    const LabeledIds test = labels_of(Partition::kTest);

    Json thresholds;
    thresholds["schema"] = "ctdr.thresholds";
    thresholds["version"] = 1;
    thresholds["fitted_on"] = val_fp;
    thresholds["rule"] = "p >= t";
    Json& tmap = thresholds["thresholds"];
    std::vector<MetricsReport> reports;
    for (std::string_view v : kVariants) {
      const auto pv = preds(v, Partition::kVal, val);
      const ThresholdChoice t = select_threshold_max_f1(pv, val.y);
      tmap[std::string(v)] = t.threshold;
      reports.push_back(evaluate_metrics(pv, val.y, t.threshold, std::string(v), "val"));
      reports.push_back(evaluate_metrics(preds(v, Partition::kTest, test), test.y, t.threshold, std::string(v), "test"));
    }
    ws_.write(artifact::kThresholds, thresholds.dump(1) + "\n", out);

    std::string tsv = "model\tvariant\tsplit\tAUC\tBrier\tF1\tF1_macro\tRecall\tPrecision\tBalAcc\tAcc\tthreshold\n";
    Json rows = Json::array();
    for (const auto& r : reports) {
      tsv += std::string(variant_title(r.variant)) + '\t' + r.variant + '\t' + r.split;
      for (double v : {r.auc, r.brier, r.f1, r.f1_macro, r.recall, r.precision, r.balanced_accuracy, r.accuracy,
                       r.threshold}) {
        tsv += '\t' + format_double(v);
      }
      tsv += '\n';
      Json j;
      j["model"] = variant_title(r.variant);
      j["variant"] = r.variant;
      j["split"] = r.split;
      j["AUC"] = r.auc;
      j["Brier"] = r.brier;
      j["F1"] = r.f1;
      j["F1_macro"] = r.f1_macro;
      j["Recall"] = r.recall;
      j["Precision"] = r.precision;
      j["BalAcc"] = r.balanced_accuracy;
      j["Acc"] = r.accuracy;
      j["threshold"] = r.threshold;
      rows.push_back(std::move(j));
    }
    ws_.write(artifact::kMetricsTsv, tsv, out);
    ws_.write(artifact::kMetricsJson, rows.dump(1) + "\n", out);
  }

  void stratify(std::vector<std::string>& out) {
    const std::string val_fp = partition_fingerprint(cfg_.output_dir, Partition::kVal);
    for (std::string_view m : {"tabular", "text", "fusion"}) calibration_checked(m, val_fp);
    const LabeledIds test = labels_of(Partition::kTest);
    const Dataset ds = dataset_from_string(ws_.read(artifact::kLabeled, Stage::kLabel));
    std::map<std::string, const FeatureRow*> by_id;
    for (const auto& e : ds.entries) by_id[e.nct_id()] = &e.features;
    std::vector<FeatureRow> rows;
    for (const auto& id : test.ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw ConstraintViolation(id + " is absent from the labeled dataset");
      rows.push_back(*it->second);
    }

    const auto p = preds("fusion_cal", Partition::kTest, test);
    const StratTable overall = stratification_table(p, test.y, cfg_.boundaries);
    const SubgroupTables by_stage = subgroup_tables(p, test.y, rows, SubgroupKey::kStage, cfg_.boundaries);
    const SubgroupTables by_enrollment = subgroup_tables(p, test.y, rows, SubgroupKey::kEnrollment, cfg_.boundaries);
    ws_.write(artifact::kStratification, strat_tables_to_tsv(std::span(&overall, 1)), out);
    ws_.write(artifact::kStratificationStage,
              strat_tables_to_tsv(by_stage.tables) + "# excluded_unstaged\t" + std::to_string(by_stage.excluded) + "\n",
              out);
    ws_.write(artifact::kStratificationEnrollment,
              strat_tables_to_tsv(by_enrollment.tables) + "# excluded_unknown_enrollment\t" +
                  std::to_string(by_enrollment.excluded) + "\n",
              out);

    std::vector<StratTable> per_model;
    for (std::string_view v : kVariants) {
      StratTable t = stratification_table(preds(v, Partition::kTest, test), test.y, cfg_.boundaries);
      t.subgroup = std::string(v);
      per_model.push_back(std::move(t));
    }
    ws_.write(artifact::kStratificationModels, strat_tables_to_tsv(per_model), out);

    std::string summary = "ctdr summary\n\n";
    if (ws_.exists(artifact::kMetricsTsv)) {
      summary += "Test metrics (thresholds chosen on validation)\n";
      char line[200];
      std::snprintf(line, sizeof line, "%-20s %7s %7s %7s %8s %7s %7s %7s %7s\n", "Model", "AUC", "Brier", "F1",
                    "F1 mac.", "Rec", "Prec", "BalAcc", "Acc");
      summary += line;
      const Json metrics = parse_json(ws_.read(artifact::kMetricsJson, Stage::kEvaluate), "metrics");
      for (const auto& r : metrics) {
        if (r.at("split") != "test") continue;
        std::snprintf(line, sizeof line, "%-20s %7.3f %7.3f %7.3f %8.3f %7.3f %7.3f %7.3f %7.3f\n",
                      r.at("model").get<std::string>().c_str(), r.at("AUC").get<double>(), r.at("Brier").get<double>(),
                      r.at("F1").get<double>(), r.at("F1_macro").get<double>(), r.at("Recall").get<double>(),
                      r.at("Precision").get<double>(), r.at("BalAcc").get<double>(), r.at("Acc").get<double>());
        summary += line;
      }
      summary += "\n";
    }
    summary += render_strat_tables("Risk stratification, calibrated LateFusion, test split", std::span(&overall, 1));
    summary += "\n" + render_strat_tables("By development stage", by_stage.tables, by_stage.excluded, "unstaged");
    summary += "\n" + render_strat_tables("By enrollment size", by_enrollment.tables, by_enrollment.excluded,
                                          "unknown enrollment");
    ws_.write(artifact::kSummary, summary, out);
  }

  const PipelineConfig& cfg_;
  Workspace ws_;
};

struct StageInputs {
  std::vector<std::string> config_keys;
  std::vector<std::string> files;  // relative to the output directory
  std::vector<std::string> external_files;
  std::vector<Stage> upstream;
};

StageInputs stage_inputs(Stage s, const PipelineConfig& cfg) {
  StageInputs in;
  auto add_partitions = [&](auto make, std::initializer_list<Partition> parts) {
    for (Partition p : parts) in.files.push_back(make(p));
  };
  const auto all = {Partition::kTrain, Partition::kVal, Partition::kTest};
  switch (s) {
    case Stage::kIngest:
      in.config_keys = {"input.paths", "input.cutoff"};
      try {
        in.external_files = expand_input_paths(cfg.input_paths);
      } catch (const IoError&) {
        // ingest itself reports the missing path
      }
      break;
    case Stage::kLabel:
      in.config_keys = {"labels.term_list", "labels.min_similarity", "labels.wilson_confidence",
                        "labels.wilson_threshold"};
      in.files = {std::string(artifact::kDataset)};
      if (!cfg.term_list.empty()) in.external_files = {cfg.term_list};
      in.upstream = {Stage::kIngest};
      break;
    case Stage::kSplit:
      in.config_keys = {"split.fractions"};
      in.files = {std::string(artifact::kLabeled)};
      in.upstream = {Stage::kLabel};
      break;
    case Stage::kFeatures:
      in.config_keys = {"features.text_dim", "features.ngram_max", "features.idf"};
      in.files = {std::string(artifact::kLabeled), std::string(artifact::kSplit)};
      in.upstream = {Stage::kSplit};
      break;
    case Stage::kTrainTabular:
      in.config_keys = {"tabular.search_trials", "tabular.seed"};
      add_partitions(artifact::tabular_matrix, all);
      add_partitions(artifact::labels, {Partition::kTrain, Partition::kVal});
      in.upstream = {Stage::kFeatures};
      break;
    case Stage::kTrainText:
      in.config_keys = {"text.l2", "text.max_iters", "text.tol"};
      add_partitions(artifact::text_matrix, all);
      add_partitions(artifact::labels, {Partition::kTrain, Partition::kVal});
      in.upstream = {Stage::kFeatures};
      break;
    case Stage::kCalibrate:
      in.config_keys = {"calibration.tabular", "calibration.text"};
      for (Partition p : all) {
        in.files.push_back(artifact::predictions("tabular_raw", p));
        in.files.push_back(artifact::predictions("text_raw", p));
      }
      add_partitions(artifact::tabular_matrix, {Partition::kVal});
      add_partitions(artifact::text_matrix, {Partition::kVal});
      add_partitions(artifact::labels, {Partition::kVal});
      in.upstream = {Stage::kTrainTabular, Stage::kTrainText};
      break;
    case Stage::kFuse:
      in.config_keys = {"fusion.grid_step", "calibration.fusion"};
      for (Partition p : all) {
        in.files.push_back(artifact::predictions("tabular_raw", p));
        in.files.push_back(artifact::predictions("text_raw", p));
      }
      add_partitions(artifact::tabular_matrix, {Partition::kVal});
      add_partitions(artifact::text_matrix, {Partition::kVal});
      add_partitions(artifact::labels, {Partition::kVal});
      in.upstream = {Stage::kTrainTabular, Stage::kTrainText};
      break;
    case Stage::kEvaluate:
      for (std::string_view v : kVariants) {
        in.files.push_back(artifact::predictions(v, Partition::kVal));
        in.files.push_back(artifact::predictions(v, Partition::kTest));
      }
      for (std::string_view m : kModels) in.files.push_back(artifact::calibration(m));
      in.files.emplace_back(artifact::kFusionModel);
      add_partitions(artifact::tabular_matrix, {Partition::kVal});
      add_partitions(artifact::text_matrix, {Partition::kVal});
      add_partitions(artifact::labels, {Partition::kVal, Partition::kTest});
      in.upstream = {Stage::kCalibrate, Stage::kFuse};
      break;
    case Stage::kStratify:
      in.config_keys = {"stratify.boundaries"};
      for (std::string_view v : kVariants) in.files.push_back(artifact::predictions(v, Partition::kTest));
      in.files.emplace_back(artifact::calibration("fusion"));
      in.files.emplace_back(artifact::kLabeled);
      in.files.emplace_back(artifact::kMetricsJson);
      add_partitions(artifact::tabular_matrix, {Partition::kVal});
      add_partitions(artifact::text_matrix, {Partition::kVal});
      add_partitions(artifact::labels, {Partition::kVal, Partition::kTest});
      in.upstream = {Stage::kEvaluate};
      break;
  }
  return in;
}

std::string file_hash(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return "missing";
  return hash_bytes(read_file(path));
}

Json load_manifest(const Workspace& ws) {
  if (!ws.exists(artifact::kManifest)) return Json{{"schema", "ctdr.manifest"}, {"version", 1}, {"stages", Json::object()}};
  Json j = parse_json(read_file(ws.path(artifact::kManifest)), "manifest");
  if (!j.is_object() || j.value("schema", "") != "ctdr.manifest" || !j.contains("stages")) {
    throw SchemaVersionMismatch("unrecognized manifest");
  }
  return j;
}

std::string input_key(Stage s, const PipelineConfig& cfg, const Workspace& ws, const Json& manifest) {
  const StageInputs in = stage_inputs(s, cfg);
  Fingerprint fp;
  fp.add(pipeline_stage_name(s));
  for (const auto& k : in.config_keys) fp.add(k).add(get_config_value(cfg, k));
  for (const auto& f : in.files) fp.add(f).add(file_hash(ws.path(f)));
  for (const auto& f : in.external_files) fp.add(f).add(file_hash(f));
  for (Stage u : in.upstream) {
    const auto& stages = manifest.at("stages");
    const std::string name(pipeline_stage_name(u));
    fp.add(name).add(stages.contains(name) ? stages[name].value("input_key", "") : std::string("none"));
  }
  return fp.hex();
}

bool is_current(Stage s, const std::string& key, const Workspace& ws, const Json& manifest) {
  const std::string name(pipeline_stage_name(s));
  const auto& stages = manifest.at("stages");
  if (!stages.contains(name)) return false;
  const Json& entry = stages[name];
  if (entry.value("input_key", "") != key) return false;
  for (const auto& [rel, hash] : entry.at("outputs").items()) {
    if (file_hash(ws.path(rel)) != hash.get<std::string>()) return false;
  }
  return true;
}

StageOutcome execute(Stage s, const PipelineConfig& cfg, const Workspace& ws) {
  Json manifest = load_manifest(ws);
  const std::string key = input_key(s, cfg, ws, manifest);
  spdlog::info("stage {}: running", pipeline_stage_name(s));
  Runner runner(cfg);
  StageOutcome outcome;
  outcome.stage = s;
  outcome.outputs = runner.run(s);
  Json outputs = Json::object();
  for (const auto& rel : outcome.outputs) outputs[rel] = file_hash(ws.path(rel));
  manifest["stages"][std::string(pipeline_stage_name(s))] = Json{{"input_key", key}, {"outputs", outputs}};
  write_file(ws.path(artifact::kManifest), manifest.dump(1) + "\n");
  return outcome;
}

}  // namespace

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::kIngest,       Stage::kLabel,     Stage::kSplit,
                                            Stage::kFeatures,     Stage::kTrainTabular, Stage::kTrainText,
                                            Stage::kCalibrate,    Stage::kFuse,      Stage::kEvaluate,
                                            Stage::kStratify};
  return stages;
}

std::string_view pipeline_stage_name(Stage s) {
  static constexpr std::array<std::string_view, 10> kNames = {
      "ingest", "label", "split", "features", "train-tabular", "train-text", "calibrate", "fuse", "evaluate",
      "stratify"};
  return kNames[static_cast<std::size_t>(s)];
}

Stage pipeline_stage_from_name(std::string_view name) {
  for (Stage s : all_stages()) {
    if (pipeline_stage_name(s) == name) return s;
  }
  throw ConfigError("unknown stage: " + std::string(name));
}

namespace artifact {
std::string tabular_matrix(Partition p) { return "features/" + std::string(partition_name(p)) + ".tabular"; }
std::string text_matrix(Partition p) { return "features/" + std::string(partition_name(p)) + ".text"; }
std::string labels(Partition p) { return "features/labels_" + std::string(partition_name(p)) + ".tsv"; }
std::string calibration(std::string_view variant) { return "calibration/" + std::string(variant) + ".json"; }
std::string predictions(std::string_view variant, Partition p) {
  return "predictions/" + std::string(variant) + "_" + std::string(partition_name(p)) + ".tsv";
}
}  // namespace artifact

std::string partition_fingerprint(const std::string& out_dir, Partition p) {
  const Workspace ws(out_dir);
  Fingerprint fp;
  for (const auto& rel : {artifact::tabular_matrix(p), artifact::text_matrix(p), artifact::labels(p)}) {
    fp.add(ws.read(rel, Stage::kFeatures));
  }
  return fp.hex();
}

StageOutcome run_stage(Stage stage, const PipelineConfig& cfg) {
  validate_config(cfg);
  return execute(stage, cfg, Workspace(cfg.output_dir));
}

std::vector<StageOutcome> run_all(const PipelineConfig& cfg) {
  validate_config(cfg);
  const Workspace ws(cfg.output_dir);
  std::vector<StageOutcome> outcomes;
  for (Stage s : all_stages()) {
    try {
      const Json manifest = load_manifest(ws);
      const std::string key = input_key(s, cfg, ws, manifest);
      if (is_current(s, key, ws, manifest)) {
        spdlog::info("stage {}: up to date", pipeline_stage_name(s));
        outcomes.push_back({s, true, {}});
        continue;
      }
      outcomes.push_back(execute(s, cfg, ws));
    } catch (const Error& e) {
      throw StageError(std::string(pipeline_stage_name(s)), e);
    }
  }
  return outcomes;
}

}  // namespace ctdr
