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

#include "ctdr/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <numeric>

#include <json.hpp>

#include "ctdr/common.hpp"
#include "ctdr/errors.hpp"
#include "ctdr/metrics.hpp"

namespace ctdr {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kModelSchema = "ctdr.gbdt";
constexpr int kModelVersion = 1;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double unit_from_key(std::uint64_t key) { return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53; }

double score_term(double g, double h, const TrainConfig& cfg) {
  const double den = h + cfg.reg_lambda;
  if (den <= 0.0) return 0.0;
  const double t = soft_threshold(g, cfg.reg_alpha);
  return t * t / den;
}

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  double gl = 0, hl = 0, gr = 0, hr = 0;
};

struct Open {
  int node;
  double g;
  double h;
};

Json number_json(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

double number_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

Json config_json(const TrainConfig& c) {
  Json j;
  j["n_estimators"] = c.n_estimators;
  j["max_depth"] = c.max_depth;
  j["learning_rate"] = number_json(c.learning_rate);
  j["subsample"] = number_json(c.subsample);
  j["colsample_bytree"] = number_json(c.colsample_bytree);
  j["gamma"] = number_json(c.gamma);
  j["min_child_weight"] = number_json(c.min_child_weight);
  j["max_delta_step"] = number_json(c.max_delta_step);
  j["reg_alpha"] = number_json(c.reg_alpha);
  j["reg_lambda"] = number_json(c.reg_lambda);
  j["scale_pos_weight"] = number_json(c.scale_pos_weight);
  j["seed"] = c.seed;
  return j;
}

TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.n_estimators = j.at("n_estimators").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.learning_rate = number_from_json(j.at("learning_rate"));
  c.subsample = number_from_json(j.at("subsample"));
  c.colsample_bytree = number_from_json(j.at("colsample_bytree"));
  c.gamma = number_from_json(j.at("gamma"));
  c.min_child_weight = number_from_json(j.at("min_child_weight"));
  c.max_delta_step = number_from_json(j.at("max_delta_step"));
  c.reg_alpha = number_from_json(j.at("reg_alpha"));
  c.reg_lambda = number_from_json(j.at("reg_lambda"));
  c.scale_pos_weight = number_from_json(j.at("scale_pos_weight"));
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

Json node_json(const Tree& tree, int index, const std::vector<std::string>& names) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(index)];
  Json j;
  if (n.is_leaf()) {
    j["leaf"] = n.weight;
    return j;
  }
  j["feature"] = n.feature;
  j["feature_name"] = names[static_cast<std::size_t>(n.feature)];
  j["threshold"] = n.threshold;
  j["default"] = n.default_left ? "left" : "right";
  j["left"] = node_json(tree, n.left, names);
  j["right"] = node_json(tree, n.right, names);
  return j;
}

Tree tree_from_json(const Json& root, std::size_t n_features) {
  // Breadth-first so node indices match the order training creates them.
  Tree tree;
  std::deque<std::pair<const Json*, int>> queue;
  tree.nodes.emplace_back();
  queue.emplace_back(&root, 0);
  while (!queue.empty()) {
    auto [j, idx] = queue.front();
    queue.pop_front();
    TreeNode node;
    if (j->contains("leaf")) {
      node.weight = j->at("leaf").get<double>();
      if (!std::isfinite(node.weight)) throw MalformedDocument("non-finite leaf weight");
    } else {
      node.feature = j->at("feature").get<int>();
      if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
        throw MalformedDocument("split feature out of range");
      }
      node.threshold = j->at("threshold").get<double>();
      const auto dir = j->at("default").get<std::string>();
      if (dir != "left" && dir != "right") throw MalformedDocument("bad default direction: " + dir);
      node.default_left = dir == "left";
      node.left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      node.right = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      queue.emplace_back(&j->at("left"), node.left);
      queue.emplace_back(&j->at("right"), node.right);
    }
    tree.nodes[static_cast<std::size_t>(idx)] = node;
  }
  return tree;
}

void check_columns(const Ensemble& model, const TabularMatrix& x) {
  if (x.cols() != model.feature_names.size()) {
    throw DimensionMismatch("model has " + std::to_string(model.feature_names.size()) + " columns, matrix has " +
                            std::to_string(x.cols()));
  }
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (x.columns[c].name != model.feature_names[c]) {
      throw DimensionMismatch("column " + std::to_string(c) + " is " + x.columns[c].name + ", model expects " +
                              model.feature_names[c]);
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const char* field) { throw ConfigError(std::string("TrainConfig.") + field + " out of range"); };
  if (n_estimators < 0) fail("n_estimators");
  if (max_depth < 0) fail("max_depth");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate");
  if (!(subsample > 0.0 && subsample <= 1.0)) fail("subsample");
  if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) fail("colsample_bytree");
  if (!(gamma >= 0.0)) fail("gamma");
  if (!(min_child_weight >= 0.0)) fail("min_child_weight");
  if (!(max_delta_step >= 0.0)) fail("max_delta_step");
  if (!(reg_alpha >= 0.0)) fail("reg_alpha");
  if (!(reg_lambda >= 0.0)) fail("reg_lambda");
  if (!(scale_pos_weight > 0.0) || !std::isfinite(scale_pos_weight)) fail("scale_pos_weight");
}

double Tree::leaf_value(std::span<const double> row) const {
  if (nodes.empty()) return 0.0;
  const TreeNode* n = &nodes[0];
  while (!n->is_leaf()) {
    const double v = row[static_cast<std::size_t>(n->feature)];
    const bool go_left = std::isnan(v) ? n->default_left : v < n->threshold;
    n = &nodes[static_cast<std::size_t>(go_left ? n->left : n->right)];
  }
  return n->weight;
}

double Ensemble::margin(std::span<const double> row) const {
  double s = 0.0;
  for (const Tree& t : trees) s += t.leaf_value(row);
  return base_score + learning_rate * s;
}

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double leaf_weight(double g, double h, const TrainConfig& cfg) {
  const double den = h + cfg.reg_lambda;
  if (den <= 0.0) return 0.0;
  double w = -soft_threshold(g, cfg.reg_alpha) / den;
  if (cfg.max_delta_step > 0.0) w = std::clamp(w, -cfg.max_delta_step, cfg.max_delta_step);
  return w;
}

Ensemble train_gbdt(const TabularMatrix& x, std::span<const int> y, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.rows();
  const std::size_t f = x.cols();
  if (y.size() != n) {
    throw DimensionMismatch(std::to_string(n) + " rows but " + std::to_string(y.size()) + " labels");
  }
  if (x.values.size() != n * f) throw DimensionMismatch("matrix storage does not match its shape");
  std::size_t pos = 0;
  for (int v : y) pos += v != 0 ? 1 : 0;
  if (pos == 0 || pos == n) throw DegenerateLabels("training labels contain a single class");

  Ensemble model;
  model.base_score = std::log(static_cast<double>(pos) / static_cast<double>(n - pos));
  model.learning_rate = cfg.learning_rate;
  model.config = cfg;
  for (const auto& c : x.columns) model.feature_names.push_back(c.name);

  std::vector<std::vector<std::uint32_t>> sorted(f);
  std::vector<std::vector<std::uint32_t>> missing(f);
  for (std::size_t c = 0; c < f; ++c) {
    auto& order = sorted[c];
    for (std::size_t r = 0; r < n; ++r) {
      (x.is_missing(r, c) ? missing[c] : order).push_back(static_cast<std::uint32_t>(r));
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x.at(a, c) < x.at(b, c); });
  }
  std::vector<std::uint64_t> row_keys(n);
  for (std::size_t r = 0; r < n; ++r) row_keys[r] = fnv1a64(x.row_ids[r]);
  std::vector<std::uint64_t> col_keys(f);
  for (std::size_t c = 0; c < f; ++c) col_keys[c] = fnv1a64(x.columns[c].name);

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  std::vector<int> node_of(n);

  for (int t = 0; t < cfg.n_estimators; ++t) {
    const std::uint64_t round_key = mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(t) + 1));
    Open root{0, 0.0, 0.0};
    for (std::size_t r = 0; r < n; ++r) {
      const double p = sigmoid(margin[r]);
      double g = p - (y[r] != 0 ? 1.0 : 0.0);
      double h = p * (1.0 - p);
      if (y[r] != 0) {
        g *= cfg.scale_pos_weight;
        h *= cfg.scale_pos_weight;
      }
      grad[r] = g;
      hess[r] = h;
      const bool kept = cfg.subsample >= 1.0 || unit_from_key(round_key ^ row_keys[r]) < cfg.subsample;
      node_of[r] = kept ? 0 : -1;
      if (kept) {
        root.g += g;
        root.h += h;
      }
    }

    std::vector<std::size_t> features;
    if (cfg.colsample_bytree >= 1.0) {
      features.resize(f);
      std::iota(features.begin(), features.end(), 0);
    } else {
      const std::uint64_t col_round = mix64(round_key ^ 0x636f6c73616d706cULL);
      std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
      for (std::size_t c = 0; c < f; ++c) keyed.emplace_back(mix64(col_round ^ col_keys[c]), c);
      std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : x.columns[a.second].name < x.columns[b.second].name;
      });
      const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.colsample_bytree * static_cast<double>(f)));
      for (std::size_t i = 0; i < std::min(k, f); ++i) features.push_back(keyed[i].second);
      std::sort(features.begin(), features.end());
    }

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<Open> open{root};
    for (int depth = 0; !open.empty(); ++depth) {
      if (depth >= cfg.max_depth) {
        for (const Open& o : open) tree.nodes[static_cast<std::size_t>(o.node)].weight = leaf_weight(o.g, o.h, cfg);
        break;
      }
      std::vector<int> slot(tree.nodes.size(), -1);
      for (std::size_t k = 0; k < open.size(); ++k) slot[static_cast<std::size_t>(open[k].node)] = static_cast<int>(k);
      const std::size_t m = open.size();
      std::vector<Candidate> best(m);
      std::vector<double> miss_g(m), miss_h(m), acc_g(m), acc_h(m), prev(m);
      std::vector<char> has_prev(m), has_missing(m);

      auto consider = [&](std::size_t k, std::size_t c, double thr, double gl, double hl, double gr, double hr,
                          bool default_left) {
        if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) return;
        const double gain =
            0.5 * (score_term(gl, hl, cfg) + score_term(gr, hr, cfg) - score_term(open[k].g, open[k].h, cfg)) -
            cfg.gamma;
        Candidate& b = best[k];
        const bool better =
            gain > b.gain ||
            (gain == b.gain && b.feature >= 0 && x.columns[c].name < x.columns[static_cast<std::size_t>(b.feature)].name);
        if (!better) return;
        b = Candidate{gain, static_cast<int>(c), thr, default_left, gl, hl, gr, hr};
      };

      for (std::size_t c : features) {
        const auto& order = sorted[c];
        std::fill(miss_g.begin(), miss_g.end(), 0.0);
        std::fill(miss_h.begin(), miss_h.end(), 0.0);
        std::fill(has_missing.begin(), has_missing.end(), 0);
        for (std::uint32_t r : missing[c]) {
          if (node_of[r] < 0) continue;
          const int k = slot[static_cast<std::size_t>(node_of[r])];
          if (k < 0) continue;
          miss_g[static_cast<std::size_t>(k)] += grad[r];
          miss_h[static_cast<std::size_t>(k)] += hess[r];
          has_missing[static_cast<std::size_t>(k)] = 1;
        }
        std::fill(acc_g.begin(), acc_g.end(), 0.0);
        std::fill(acc_h.begin(), acc_h.end(), 0.0);
        std::fill(has_prev.begin(), has_prev.end(), 0);
        for (std::uint32_t r : order) {
          if (node_of[r] < 0) continue;
          const int ki = slot[static_cast<std::size_t>(node_of[r])];
          if (ki < 0) continue;
          const auto k = static_cast<std::size_t>(ki);
          const double v = x.at(r, c);
          if (has_prev[k] && v > prev[k]) {
            double thr = prev[k] + 0.5 * (v - prev[k]);
            if (!(thr > prev[k])) thr = v;
            consider(k, c, thr, acc_g[k] + miss_g[k], acc_h[k] + miss_h[k], open[k].g - acc_g[k] - miss_g[k],
                     open[k].h - acc_h[k] - miss_h[k], true);
            if (has_missing[k]) {
              consider(k, c, thr, acc_g[k], acc_h[k], open[k].g - acc_g[k], open[k].h - acc_h[k], false);
            }
          }
          acc_g[k] += grad[r];
          acc_h[k] += hess[r];
          prev[k] = v;
          has_prev[k] = 1;
        }
      }

      std::vector<Open> next;
      for (std::size_t k = 0; k < m; ++k) {
        const auto idx = static_cast<std::size_t>(open[k].node);
        const Candidate& b = best[k];
        if (b.feature < 0) {
          tree.nodes[idx].weight = leaf_weight(open[k].g, open[k].h, cfg);
          continue;
        }
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[idx];
        node.feature = b.feature;
        node.threshold = b.threshold;
        node.default_left = b.default_left;
        node.left = left;
        node.right = left + 1;
        next.push_back({left, b.gl, b.hl});
        next.push_back({left + 1, b.gr, b.hr});
      }
      for (std::size_t r = 0; r < n; ++r) {
        if (node_of[r] < 0) continue;
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_of[r])];
        if (node.is_leaf()) continue;
        const double v = x.at(r, static_cast<std::size_t>(node.feature));
        const bool go_left = std::isnan(v) ? node.default_left : v < node.threshold;
        node_of[r] = go_left ? node.left : node.right;
      }
      open = std::move(next);
    }

    for (std::size_t r = 0; r < n; ++r) margin[r] += cfg.learning_rate * tree.leaf_value(x.row(r));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

std::vector<double> predict_proba(const Ensemble& model, const TabularMatrix& x) {
  check_columns(model, x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = sigmoid(model.margin(x.row(r)));
  return out;
}

std::string ensemble_to_json(const Ensemble& model) {
  Json j;
  j["schema"] = kModelSchema;
  j["version"] = kModelVersion;
  j["base_score"] = model.base_score;
  j["learning_rate"] = model.learning_rate;
  j["feature_names"] = model.feature_names;
  j["config"] = config_json(model.config);
  Json trees = Json::array();
  for (const Tree& t : model.trees) {
    trees.push_back(t.nodes.empty() ? Json{{"leaf", 0.0}} : node_json(t, 0, model.feature_names));
  }
  j["trees"] = std::move(trees);
  return j.dump(1) + "\n";
}

Ensemble ensemble_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw MalformedDocument(std::string("model is not JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kModelSchema || j.value("version", 0) != kModelVersion) {
    throw SchemaVersionMismatch("expected " + std::string(kModelSchema) + " version " + std::to_string(kModelVersion));
  }
  try {
    Ensemble m;
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.config = config_from_json(j.at("config"));
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t, m.feature_names.size()));
    return m;
  } catch (const Json::exception& e) {
    throw MalformedDocument(std::string("bad model: ") + e.what());
  }
}

SearchSpace SearchSpace::point(const TrainConfig& c) {
  SearchSpace s;
  s.n_estimators = {c.n_estimators, c.n_estimators};
  s.max_depth = {c.max_depth, c.max_depth};
  s.learning_rate = {c.learning_rate, c.learning_rate, true};
  s.subsample = {c.subsample, c.subsample};
  s.colsample_bytree = {c.colsample_bytree, c.colsample_bytree};
  s.gamma = {c.gamma, c.gamma};
  s.min_child_weight = {c.min_child_weight, c.min_child_weight};
  s.max_delta_step = {c.max_delta_step, c.max_delta_step};
  s.reg_alpha = {c.reg_alpha, c.reg_alpha, true};
  s.reg_lambda = {c.reg_lambda, c.reg_lambda, true};
  s.scale_pos_weight_factor = {1.0, 1.0};
  return s;
}

SearchResult random_search(const SearchSpace& space, int trials, std::uint64_t seed, const TabularMatrix& x_train,
                           std::span<const int> y_train, const TabularMatrix& x_val, std::span<const int> y_val) {
  if (trials < 1) throw ConfigError("random search needs at least one trial");
  std::size_t pos = 0;
  for (int v : y_train) pos += v != 0 ? 1 : 0;
  if (pos == 0 || pos == y_train.size()) throw DegenerateLabels("training labels contain a single class");
  const double w = static_cast<double>(y_train.size() - pos) / static_cast<double>(pos);

  SplitMix64 rng(seed);
  auto draw_int = [&](IntRange r) { return r.lo == r.hi ? r.lo : static_cast<int>(rng.uniform_int(r.lo, r.hi)); };
  auto draw_real = [&](RealRange r) {
    if (r.lo == r.hi) return r.lo;
    if (r.log_scale) return std::exp(rng.uniform(std::log(r.lo), std::log(r.hi)));
    return rng.uniform(r.lo, r.hi);
  };

  SearchResult result;
  result.best_auc = -1.0;
  std::exception_ptr first_error;
  for (int i = 0; i < trials; ++i) {
    SearchTrial trial;
    trial.index = i;
    TrainConfig& c = trial.config;
    c.n_estimators = draw_int(space.n_estimators);
    c.max_depth = draw_int(space.max_depth);
    c.learning_rate = draw_real(space.learning_rate);
    c.subsample = draw_real(space.subsample);
    c.colsample_bytree = draw_real(space.colsample_bytree);
    c.gamma = draw_real(space.gamma);
    c.min_child_weight = draw_real(space.min_child_weight);
    c.max_delta_step = draw_real(space.max_delta_step);
    c.reg_alpha = draw_real(space.reg_alpha);
    c.reg_lambda = draw_real(space.reg_lambda);
    c.scale_pos_weight = draw_real(space.scale_pos_weight_factor) * w;
    c.seed = rng.next();
    try {
      const Ensemble model = train_gbdt(x_train, y_train, c);
      const double auc = auc_roc(predict_proba(model, x_val), y_val);
      trial.val_auc = auc;
      if (auc > result.best_auc) {
        result.best_auc = auc;
        result.best = c;
      }
    } catch (const Error& e) {
      trial.error = e.what();
      if (!first_error) first_error = std::current_exception();
    }
    result.trace.push_back(std::move(trial));
  }
  if (result.best_auc < 0.0) std::rethrow_exception(first_error);
  return result;
}

std::string search_trace_to_tsv(const SearchResult& result) {
  std::string out =
      "trial\tn_estimators\tmax_depth\tlearning_rate\tsubsample\tcolsample_bytree\tgamma\tmin_child_weight\t"
      "max_delta_step\treg_alpha\treg_lambda\tscale_pos_weight\tseed\tval_auc\tstatus\n";
  for (const auto& t : result.trace) {
    const TrainConfig& c = t.config;
    out += std::to_string(t.index) + '\t' + std::to_string(c.n_estimators) + '\t' + std::to_string(c.max_depth);
    for (double v : {c.learning_rate, c.subsample, c.colsample_bytree, c.gamma, c.min_child_weight, c.max_delta_step,
                     c.reg_alpha, c.reg_lambda, c.scale_pos_weight}) {
      out += '\t' + format_double(v);
    }
    out += '\t' + std::to_string(c.seed) + '\t';
    out += t.val_auc ? format_double(*t.val_auc) : "NA";
    out += '\t';
    out += t.error.empty() ? "ok" : "failed: " + t.error;
    out += '\n';
  }
  return out;
}

}  // namespace ctdr
