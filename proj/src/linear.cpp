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

#include "ctdr/linear.hpp"

#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "ctdr/common.hpp"
#include "ctdr/errors.hpp"

namespace ctdr {

namespace {

constexpr std::string_view kMagic = "%ctdr-linear v1";

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_dim(const TextMatrix& x, std::size_t dim) {
  if (x.dim != dim) {
    throw DimensionMismatch("text matrix has " + std::to_string(x.dim) + " columns, expected " + std::to_string(dim));
  }
}

}  // namespace

ObjectiveValue logistic_objective(const TextMatrix& x, std::span<const int> y, std::span<const double> params,
                                  double l2, double class_weight_pos) {
  const std::size_t d = x.dim;
  if (params.size() != d + 1) throw DimensionMismatch("parameter vector must hold dim + 1 values");
  if (y.size() != x.rows()) throw DimensionMismatch("labels do not match rows");
  ObjectiveValue out;
  out.grad.assign(d + 1, 0.0);
  const double b = params[d];
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto idx = x.row_indices(r);
    const auto val = x.row_values(r);
    double z = b;
    for (std::size_t k = 0; k < idx.size(); ++k) z += params[idx[k]] * val[k];
    const bool pos = y[r] != 0;
    const double c = pos ? class_weight_pos : 1.0;
    out.loss += c * (pos ? softplus(-z) : softplus(z));
    const double residual = c * (sigmoid(z) - (pos ? 1.0 : 0.0)) * inv_n;
    for (std::size_t k = 0; k < idx.size(); ++k) out.grad[idx[k]] += residual * val[k];
    out.grad[d] += residual;
  }
  out.loss *= inv_n;
  double sq = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    sq += params[j] * params[j];
    out.grad[j] += l2 * params[j];
  }
  out.loss += 0.5 * l2 * sq;
  return out;
}

LinearModel train_linear(const TextMatrix& x, std::span<const int> y, const LinearConfig& cfg, LinearTrace* trace) {
  if (y.size() != x.rows()) throw DimensionMismatch("labels do not match rows");
  if (!(cfg.l2 >= 0.0) || !(cfg.class_weight_pos > 0.0) || cfg.max_iters < 0 || !(cfg.tol >= 0.0) ||
      cfg.history < 1) {
    throw ConfigError("invalid linear model configuration");
  }
  std::size_t pos = 0;
  for (int v : y) pos += v != 0 ? 1 : 0;
  if (pos == 0 || pos == y.size()) throw DegenerateLabels("training labels contain a single class");

  const std::size_t d = x.dim;
  std::vector<double> params(d + 1, 0.0);
  ObjectiveValue cur = logistic_objective(x, y, params, cfg.l2, cfg.class_weight_pos);
  LinearTrace local;
  LinearTrace& tr = trace != nullptr ? *trace : local;
  tr = {};
  tr.losses.push_back(cur.loss);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(d + 1), next(d + 1);
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (std::sqrt(dot(cur.grad, cur.grad)) < cfg.tol) {
      tr.converged = true;
      break;
    }
    // Two-loop recursion.
    dir = cur.grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
      for (std::size_t j = 0; j <= d; ++j) dir[j] -= alpha[k] * y_hist[k][j];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    for (double& v : dir) v *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], dir);
      for (std::size_t j = 0; j <= d; ++j) dir[j] += (alpha[k] - beta) * s_hist[k][j];
    }
    for (double& v : dir) v = -v;
    double slope = dot(cur.grad, dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j <= d; ++j) dir[j] = -cur.grad[j];
      slope = dot(cur.grad, dir);
    }
    double step = s_hist.empty() ? 1.0 / std::max(1.0, std::sqrt(-slope)) : 1.0;
    bool accepted = false;
    ObjectiveValue trial;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      for (std::size_t j = 0; j <= d; ++j) next[j] = params[j] + step * dir[j];
      trial = logistic_objective(x, y, next, cfg.l2, cfg.class_weight_pos);
      if (trial.loss <= cur.loss + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    std::vector<double> s(d + 1), yv(d + 1);
    for (std::size_t j = 0; j <= d; ++j) {
      s[j] = next[j] - params[j];
      yv[j] = trial.grad[j] - cur.grad[j];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(yv, yv))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    params.swap(next);
    cur = std::move(trial);
    tr.losses.push_back(cur.loss);
    tr.iterations = it + 1;
  }
  if (!tr.converged && std::sqrt(dot(cur.grad, cur.grad)) < cfg.tol) tr.converged = true;

  LinearModel model;
  model.dim = d;
  model.intercept = params[d];
  params.pop_back();
  model.weights = std::move(params);
  model.config = cfg;
  return model;
}

std::vector<double> predict_proba(const LinearModel& model, const TextMatrix& x) {
  check_dim(x, model.dim);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto idx = x.row_indices(r);
    const auto val = x.row_values(r);
    double z = model.intercept;
    for (std::size_t k = 0; k < idx.size(); ++k) z += model.weights[idx[k]] * val[k];
    out[r] = sigmoid(z);
  }
  return out;
}

std::string linear_model_to_string(const LinearModel& m) {
  std::size_t nnz = 0;
  for (double w : m.weights) nnz += w != 0.0 ? 1 : 0;
  std::string out = std::string(kMagic) + " dim=" + std::to_string(m.dim) + "\n";
  out += "intercept " + format_double(m.intercept) + "\n";
  out += "l2 " + format_double(m.config.l2) + "\n";
  out += "class_weight_pos " + format_double(m.config.class_weight_pos) + "\n";
  out += "max_iters " + std::to_string(m.config.max_iters) + "\n";
  out += "tol " + format_double(m.config.tol) + "\n";
  out += "history " + std::to_string(m.config.history) + "\n";
  out += "weights " + std::to_string(nnz) + "\n";
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    if (m.weights[j] != 0.0) out += std::to_string(j) + ' ' + format_double(m.weights[j]) + '\n';
  }
  return out;
}

LinearModel linear_model_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kMagic, 0) != 0) throw SchemaVersionMismatch("not a ctdr-linear v1 file");
  LinearModel m;
  const auto pos = line.find("dim=");
  if (pos == std::string::npos) throw MalformedDocument("linear model header lacks dim");
  try {
    m.dim = std::stoull(line.substr(pos + 4));
    std::string key;
    std::size_t nnz = 0;
    while (in >> key) {
      if (key == "intercept") in >> m.intercept;
      else if (key == "l2") in >> m.config.l2;
      else if (key == "class_weight_pos") in >> m.config.class_weight_pos;
      else if (key == "max_iters") in >> m.config.max_iters;
      else if (key == "tol") in >> m.config.tol;
      else if (key == "history") in >> m.config.history;
      else if (key == "weights") {
        in >> nnz;
        break;
      } else {
        throw MalformedDocument("unknown linear model key: " + key);
      }
    }
    m.weights.assign(m.dim, 0.0);
    for (std::size_t k = 0; k < nnz; ++k) {
      std::size_t j = 0;
      double w = 0.0;
      if (!(in >> j >> w) || j >= m.dim) throw MalformedDocument("bad weight line");
      m.weights[j] = w;
    }
    if (!in && !in.eof()) throw MalformedDocument("truncated linear model");
  } catch (const std::logic_error& e) {
    throw MalformedDocument(std::string("bad linear model: ") + e.what());
  }
  return m;
}

}  // namespace ctdr
