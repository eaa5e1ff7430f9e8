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

#include "ctdr/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "ctdr/errors.hpp"

namespace ctdr {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kSchema = "ctdr.calibration";
constexpr int kVersion = 1;

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NonFinite(std::string("non-finite ") + what);
  }
}

// Negative log-likelihood of targets t under p = 1 / (1 + exp(f)).
double platt_nll(std::span<const double> s, std::span<const double> t, double a, double b) {
  double f = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double z = s[i] * a + b;
    f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
  }
  return f;
}

}  // namespace

double platt_score(double p) {
  const double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::log(q / (1.0 - q));
}

PlattParams fit_platt(std::span<const double> scores, std::span<const int> labels, int max_iters, double tol) {
  if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
  check_finite(scores, "calibration score");
  double n_pos = 0;
  for (int v : labels) n_pos += v != 0 ? 1 : 0;
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DegenerateLabels("calibration labels contain a single class");

  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  std::vector<double> t(labels.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = labels[i] != 0 ? hi : lo;

  // Constant scores leave A unidentified; the optimum is A = 0 and the mean target.
  if (std::all_of(scores.begin(), scores.end(), [&](double s) { return s == scores[0]; })) {
    const double mean = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
    return {0.0, std::log((1.0 - mean) / mean)};
  }

  double a = 0.0;
  double b = std::log((n_neg + 1.0) / (n_pos + 1.0));
  double fval = platt_nll(scores, t, a, b);
  constexpr double kSigma = 1e-12;
  constexpr double kMinStep = 1e-10;
  for (int it = 0; it < max_iters; ++it) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double z = scores[i] * a + b;
      double p, q;
      if (z >= 0) {
        const double e = std::exp(-z);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(z);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = p * q;
      h11 += scores[i] * scores[i] * d2;
      h22 += d2;
      h21 += scores[i] * d2;
      const double d1 = t[i] - p;
      g1 += scores[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < tol && std::abs(g2) < tol) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= kMinStep) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = platt_nll(scores, t, na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < kMinStep) break;
  }
  return {a, b};
}

std::vector<double> apply_platt(const PlattParams& params, std::span<const double> raw_probs) {
  std::vector<double> out(raw_probs.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = params.a * platt_score(raw_probs[i]) + params.b;
    out[i] = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
  }
  return out;
}

double IsotonicMap::operator()(double s) const {
  if (blocks.empty()) return s;
  auto it = std::upper_bound(blocks.begin(), blocks.end(), s,
                             [](double v, const IsotonicBlock& b) { return v < b.lo; });
  if (it == blocks.begin()) return blocks.front().value;
  return std::prev(it)->value;
}

IsotonicMap fit_isotonic(std::span<const double> scores, std::span<const double> targets,
                         std::span<const double> weights) {
  if (scores.empty()) throw EmptyInput("isotonic fit on no points");
  if (scores.size() != targets.size() || (!weights.empty() && weights.size() != scores.size())) {
    throw LengthMismatch("isotonic inputs differ in length");
  }
  check_finite(scores, "isotonic score");
  check_finite(targets, "isotonic target");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("isotonic weights must be positive");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<IsotonicBlock> stack;
  auto push = [&](IsotonicBlock blk) {
    while (!stack.empty() && stack.back().value > blk.value) {
      const IsotonicBlock& top = stack.back();
      const double w = top.weight + blk.weight;
      blk = {top.lo, blk.hi, (top.value * top.weight + blk.value * blk.weight) / w, w};
      stack.pop_back();
    }
    stack.push_back(blk);
  };
  for (std::size_t i = 0; i < order.size();) {
    // Tied scores pool first.
    const double s = scores[order[i]];
    double sw = 0.0, swt = 0.0;
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      const double w = weights.empty() ? 1.0 : weights[order[i]];
      sw += w;
      swt += w * targets[order[i]];
    }
    push({s, s, swt / sw, sw});
  }
  return IsotonicMap{std::move(stack)};
}

std::vector<double> apply_isotonic(const IsotonicMap& map, std::span<const double> raw_probs) {
  std::vector<double> out(raw_probs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = map(raw_probs[i]);
  return out;
}

std::string_view calibration_method_name(CalibrationMethod m) {
  return m == CalibrationMethod::kPlatt ? "platt" : "isotonic";
}

CalibrationMethod calibration_method_from_name(std::string_view name) {
  if (name == "platt") return CalibrationMethod::kPlatt;
  if (name == "isotonic") return CalibrationMethod::kIsotonic;
  throw ConfigError("unknown calibration method: " + std::string(name));
}

Calibration fit_calibration(CalibrationMethod method, std::span<const double> raw_probs, std::span<const int> labels,
                            std::string fitted_on) {
  Calibration cal;
  cal.method = method;
  cal.fitted_on = std::move(fitted_on);
  if (method == CalibrationMethod::kPlatt) {
    std::vector<double> s(raw_probs.size());
    std::transform(raw_probs.begin(), raw_probs.end(), s.begin(), platt_score);
    cal.platt = fit_platt(s, labels);
  } else {
    if (raw_probs.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
    std::vector<double> t(labels.begin(), labels.end());
    for (double& v : t) v = v != 0.0 ? 1.0 : 0.0;
    cal.isotonic = fit_isotonic(raw_probs, t);
  }
  return cal;
}

std::vector<double> apply_calibration(const Calibration& cal, std::span<const double> raw_probs) {
  return cal.method == CalibrationMethod::kPlatt ? apply_platt(cal.platt, raw_probs)
                                                 : apply_isotonic(cal.isotonic, raw_probs);
}

std::string calibration_to_json(const Calibration& cal) {
  Json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["method"] = calibration_method_name(cal.method);
  j["fitted_on"] = cal.fitted_on;
  if (cal.method == CalibrationMethod::kPlatt) {
    j["A"] = cal.platt.a;
    j["B"] = cal.platt.b;
  } else {
    Json blocks = Json::array();
    for (const auto& b : cal.isotonic.blocks) blocks.push_back({b.lo, b.hi, b.value, b.weight});
    j["blocks"] = std::move(blocks);
  }
  return j.dump(1) + "\n";
}

Calibration calibration_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw MalformedDocument(std::string("calibration is not JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kSchema || j.value("version", 0) != kVersion) {
    throw SchemaVersionMismatch("expected " + std::string(kSchema) + " version " + std::to_string(kVersion));
  }
  try {
    Calibration cal;
    cal.method = calibration_method_from_name(j.at("method").get<std::string>());
    cal.fitted_on = j.at("fitted_on").get<std::string>();
    if (cal.method == CalibrationMethod::kPlatt) {
      cal.platt = {j.at("A").get<double>(), j.at("B").get<double>()};
    } else {
      for (const auto& b : j.at("blocks")) {
        cal.isotonic.blocks.push_back(
            {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()});
      }
    }
    return cal;
  } catch (const Json::exception& e) {
    throw MalformedDocument(std::string("bad calibration: ") + e.what());
  }
}

}  // namespace ctdr
