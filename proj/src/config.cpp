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

#include "ctdr/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>

#include "ctdr/errors.hpp"

namespace ctdr {

namespace {

struct KeyDef {
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw ConfigError(key + ": not a number: '" + v + "'");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not an integer: '" + v + "'");
  return out;
}

std::vector<double> to_reals(const std::string& key, const std::string& v, std::size_t n) {
  std::vector<double> out;
  for (const auto& part : split_string(v, ',')) out.push_back(to_real(key, trim(part)));
  if (out.size() != n) throw ConfigError(key + ": expected " + std::to_string(n) + " comma-separated numbers");
  return out;
}

std::string join_reals(std::initializer_list<double> v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ",") + format_double(x);
  return out;
}

const std::map<std::string, KeyDef>& key_defs() {
  static const std::map<std::string, KeyDef> defs = {
      {"input.paths",
       {[](const PipelineConfig& c) {
          std::string out;
          for (const auto& p : c.input_paths) out += (out.empty() ? "" : ",") + p;
          return out;
        },
        [](PipelineConfig& c, const std::string& v) {
          c.input_paths.clear();
          for (const auto& p : split_string(v, ',')) {
            if (!trim(p).empty()) c.input_paths.push_back(trim(p));
          }
        }}},
      {"input.cutoff",
       {[](const PipelineConfig& c) { return format_date(c.cutoff); },
        [](PipelineConfig& c, const std::string& v) {
          const auto d = parse_date(v);
          if (!d || v.size() != 10) throw ConfigError("input.cutoff: expected YYYY-MM-DD, got '" + v + "'");
          c.cutoff = *d;
        }}},
      {"labels.term_list",
       {[](const PipelineConfig& c) { return c.term_list; },
        [](PipelineConfig& c, const std::string& v) { c.term_list = v; }}},
      {"labels.min_similarity",
       {[](const PipelineConfig& c) { return format_double(c.min_similarity); },
        [](PipelineConfig& c, const std::string& v) { c.min_similarity = to_real("labels.min_similarity", v); }}},
      {"labels.wilson_confidence",
       {[](const PipelineConfig& c) { return format_double(c.wilson_confidence); },
        [](PipelineConfig& c, const std::string& v) {
          c.wilson_confidence = to_real("labels.wilson_confidence", v);
        }}},
      {"labels.wilson_threshold",
       {[](const PipelineConfig& c) { return format_double(c.wilson_threshold); },
        [](PipelineConfig& c, const std::string& v) { c.wilson_threshold = to_real("labels.wilson_threshold", v); }}},
      {"split.fractions",
       {[](const PipelineConfig& c) { return join_reals({c.fractions.train, c.fractions.val, c.fractions.test}); },
        [](PipelineConfig& c, const std::string& v) {
          const auto f = to_reals("split.fractions", v, 3);
          c.fractions = {f[0], f[1], f[2]};
        }}},
      {"features.text_dim",
       {[](const PipelineConfig& c) { return std::to_string(c.text_features.dim); },
        [](PipelineConfig& c, const std::string& v) {
          c.text_features.dim = to_int<std::size_t>("features.text_dim", v);
        }}},
      {"features.ngram_max",
       {[](const PipelineConfig& c) { return std::to_string(c.text_features.ngram_max); },
        [](PipelineConfig& c, const std::string& v) { c.text_features.ngram_max = to_int<int>("features.ngram_max", v); }}},
      {"features.idf",
       {[](const PipelineConfig& c) {
          return std::string(c.text_features.idf == IdfConvention::kSmooth ? "smooth" : "plain");
        },
        [](PipelineConfig& c, const std::string& v) {
          if (v == "smooth") c.text_features.idf = IdfConvention::kSmooth;
          else if (v == "plain") c.text_features.idf = IdfConvention::kPlain;
          else throw ConfigError("features.idf: expected smooth or plain, got '" + v + "'");
        }}},
      {"tabular.search_trials",
       {[](const PipelineConfig& c) { return std::to_string(c.search_trials); },
        [](PipelineConfig& c, const std::string& v) { c.search_trials = to_int<int>("tabular.search_trials", v); }}},
      {"tabular.seed",
       {[](const PipelineConfig& c) { return std::to_string(c.seed); },
        [](PipelineConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>("tabular.seed", v); }}},
      {"text.l2",
       {[](const PipelineConfig& c) { return format_double(c.text_model.l2); },
        [](PipelineConfig& c, const std::string& v) { c.text_model.l2 = to_real("text.l2", v); }}},
      {"text.max_iters",
       {[](const PipelineConfig& c) { return std::to_string(c.text_model.max_iters); },
        [](PipelineConfig& c, const std::string& v) { c.text_model.max_iters = to_int<int>("text.max_iters", v); }}},
      {"text.tol",
       {[](const PipelineConfig& c) { return format_double(c.text_model.tol); },
        [](PipelineConfig& c, const std::string& v) { c.text_model.tol = to_real("text.tol", v); }}},
      {"calibration.tabular",
       {[](const PipelineConfig& c) { return std::string(calibration_method_name(c.calibration_tabular)); },
        [](PipelineConfig& c, const std::string& v) { c.calibration_tabular = calibration_method_from_name(v); }}},
      {"calibration.text",
       {[](const PipelineConfig& c) { return std::string(calibration_method_name(c.calibration_text)); },
        [](PipelineConfig& c, const std::string& v) { c.calibration_text = calibration_method_from_name(v); }}},
      {"calibration.fusion",
       {[](const PipelineConfig& c) { return std::string(calibration_method_name(c.calibration_fusion)); },
        [](PipelineConfig& c, const std::string& v) { c.calibration_fusion = calibration_method_from_name(v); }}},
      {"fusion.grid_step",
       {[](const PipelineConfig& c) { return format_double(c.fusion_grid_step); },
        [](PipelineConfig& c, const std::string& v) { c.fusion_grid_step = to_real("fusion.grid_step", v); }}},
      {"stratify.boundaries",
       {[](const PipelineConfig& c) { return join_reals({c.boundaries[0], c.boundaries[1], c.boundaries[2]}); },
        [](PipelineConfig& c, const std::string& v) {
          const auto b = to_reals("stratify.boundaries", v, 3);
          c.boundaries = {b[0], b[1], b[2]};
        }}},
      {"output.dir",
       {[](const PipelineConfig& c) { return c.output_dir; },
        [](PipelineConfig& c, const std::string& v) { c.output_dir = v; }}},
  };
  return defs;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "input.paths",       "input.cutoff",          "labels.term_list",    "labels.min_similarity",
      "labels.wilson_confidence", "labels.wilson_threshold", "split.fractions", "features.text_dim",
      "features.ngram_max", "features.idf",         "tabular.search_trials", "tabular.seed",
      "text.l2",           "text.max_iters",        "text.tol",            "calibration.tabular",
      "calibration.text",  "calibration.fusion",    "fusion.grid_step",    "stratify.boundaries",
      "output.dir"};
  return keys;
}

std::string get_config_value(const PipelineConfig& cfg, const std::string& key) {
  const auto it = key_defs().find(key);
  if (it == key_defs().end()) throw ConfigError("unknown config key: " + key);
  return it->second.get(cfg);
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = key_defs().find(key);
  if (it == key_defs().end()) throw ConfigError("unknown config key: " + key);
  it->second.set(cfg, trim(value));
}

std::string config_to_string(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& key : config_keys()) out += key + " = " + get_config_value(cfg, key) + "\n";
  return out;
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::size_t line_no = 0;
  for (const auto& raw : split_string(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    set_config_value(base, trim(std::string_view(line).substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

std::string env_var_name(const std::string& key) {
  std::string out = "CTDR_";
  for (char ch : key) {
    out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return out;
}

void apply_env_overrides(PipelineConfig& cfg,
                         const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  for (const auto& key : config_keys()) {
    const std::string var = env_var_name(key);
    std::optional<std::string> value;
    if (getenv) {
      value = getenv(var);
    } else if (const char* v = std::getenv(var.c_str())) {
      value = v;
    }
    if (value) set_config_value(cfg, key, *value);
  }
}

void validate_config(const PipelineConfig& cfg) {
  const auto& f = cfg.fractions;
  if (!(f.train > 0 && f.val > 0 && f.test > 0) || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("split.fractions must be positive and sum to 1");
  }
  if (!(cfg.min_similarity > 0.0 && cfg.min_similarity <= 1.0)) {
    throw ConfigError("labels.min_similarity must lie in (0, 1]");
  }
  if (!(cfg.wilson_confidence > 0.0 && cfg.wilson_confidence < 1.0)) {
    throw ConfigError("labels.wilson_confidence must lie in (0, 1)");
  }
  if (!(cfg.wilson_threshold >= 0.0 && cfg.wilson_threshold < 1.0)) {
    throw ConfigError("labels.wilson_threshold must lie in [0, 1)");
  }
  const std::size_t d = cfg.text_features.dim;
  if (d == 0 || (d & (d - 1)) != 0 || d > (std::size_t{1} << 24)) {
    throw ConfigError("features.text_dim must be a power of two up to 2^24");
  }
  if (cfg.text_features.ngram_max < 1) throw ConfigError("features.ngram_max must be at least 1");
  if (cfg.search_trials < 1) throw ConfigError("tabular.search_trials must be at least 1");
  if (!(cfg.text_model.l2 >= 0.0) || cfg.text_model.max_iters < 0 || !(cfg.text_model.tol >= 0.0)) {
    throw ConfigError("text model settings out of range");
  }
  if (!(cfg.fusion_grid_step > 0.0 && cfg.fusion_grid_step <= 0.5)) {
    throw ConfigError("fusion.grid_step must lie in (0, 0.5]");
  }
  validate_boundaries(cfg.boundaries);
  if (cfg.output_dir.empty()) throw ConfigError("output.dir must be set");
}

}  // namespace ctdr
