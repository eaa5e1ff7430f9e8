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

#include "ctdr/features.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <sstream>

#include "ctdr/errors.hpp"
#include "json.hpp"

namespace ctdr {

namespace {

template <typename E>
void add_one_hot(std::vector<ColumnDesc>& cols, ColumnKind kind, bool with_missing) {
  const std::string base(EnumTraits<E>::field);
  for (std::size_t i = 0; i < enum_size<E>(); ++i) cols.push_back({base + "_" + std::to_string(i), kind});
  if (with_missing) cols.push_back({base + "_missing", kind});
}

template <typename E>
double* fill_one_hot(double* cell, const std::optional<E>& value) {
  const std::size_t n = enum_size<E>();
  for (std::size_t i = 0; i <= n; ++i) cell[i] = 0.0;
  cell[value ? static_cast<std::size_t>(*value) : n] = 1.0;
  return cell + n + 1;
}

template <typename E>
double* fill_multi_hot(double* cell, const std::optional<std::vector<E>>& value) {
  const std::size_t n = enum_size<E>();
  for (std::size_t i = 0; i < n; ++i) cell[i] = value ? 0.0 : TabularMatrix::kMissing;
  if (value) {
    for (auto e : *value) cell[static_cast<std::size_t>(e)] = 1.0;
  }
  return cell + n;
}

double binary(const std::optional<bool>& v) { return v ? (*v ? 1.0 : 0.0) : TabularMatrix::kMissing; }

double numeric(const std::optional<std::int64_t>& v) {
  return v ? static_cast<double>(*v) : TabularMatrix::kMissing;
}

ColumnKind column_kind_from_name(std::string_view name) {
  for (auto k : {ColumnKind::kNumeric, ColumnKind::kOneHot, ColumnKind::kMultiHot, ColumnKind::kBinary}) {
    if (column_kind_name(k) == name) return k;
  }
  throw SchemaVersionMismatch("unknown column kind '" + std::string(name) + "'");
}

// Per-row sparse counts of hashed n-grams.
std::map<std::uint32_t, double> hashed_counts(const FeatureRow& row, const TextVectorizerConfig& cfg) {
  std::map<std::uint32_t, double> counts;
  const auto fields = text_fields(row);
  for (std::size_t f = 0; f < fields.size(); ++f) {
    const std::string_view field = kTextFieldNames[f];
    std::vector<std::string> tokens;
    if (*fields[f]) {
      tokens = tokenize(**fields[f]);
    } else {
      tokens.emplace_back(kUnknownToken);
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::string gram;
      for (int n = 1; n <= cfg.ngram_max && i + static_cast<std::size_t>(n) <= tokens.size(); ++n) {
        if (n > 1) gram += ' ';
        gram += tokens[i + static_cast<std::size_t>(n) - 1];
        counts[hash_bucket(field, gram, cfg.dim)] += 1.0;
      }
    }
  }
  return counts;
}

void check_config(const TextVectorizerConfig& cfg) {
  if (cfg.dim == 0 || !std::has_single_bit(cfg.dim) || cfg.dim > (std::size_t{1} << 31)) {
    throw ConfigError("text dimensionality must be a power of two");
  }
  if (cfg.ngram_max < 1) throw ConfigError("ngram_max must be at least 1");
}

TextMatrix weigh(std::span<const FeatureRow> rows, const IdfStats& stats) {
  TextMatrix m;
  m.dim = stats.config.dim;
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (const auto& row : rows) {
    idx.clear();
    val.clear();
    double norm2 = 0.0;
    for (const auto& [bucket, tf] : hashed_counts(row, stats.config)) {
      const double w = tf * stats.idf(bucket);
      if (w == 0.0) continue;
      idx.push_back(bucket);
      val.push_back(w);
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& v : val) v *= inv;
    }
    m.push_row(row.nct_id, idx, val);
  }
  return m;
}

std::string fingerprint_rows(std::span<const FeatureRow> rows) {
  Fingerprint fp;
  for (const auto& row : rows) {
    fp.add(row.nct_id);
    for (const auto* field : text_fields(row)) fp.add(*field ? **field : std::string("\x00", 1));
  }
  return fp.hex();
}

struct MatrixHeader {
  std::string kind;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

MatrixHeader parse_header(const std::string& line) {
  if (line.rfind("%ctdr-matrix v1 ", 0) != 0) throw SchemaVersionMismatch("matrix file lacks '%ctdr-matrix v1' header");
  MatrixHeader h;
  for (const auto& tok : split_string(line.substr(16), ' ')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto value = tok.substr(eq + 1);
    if (key == "kind") h.kind = value;
    else if (key == "rows") h.rows = std::stoull(value);
    else if (key == "cols") h.cols = std::stoull(value);
  }
  return h;
}

std::vector<std::string> tab_list(const std::string& line, const std::string& prefix) {
  if (line.rfind(prefix, 0) != 0) throw SchemaVersionMismatch("expected '" + prefix + "' line");
  const auto body = line.substr(prefix.size());
  if (body.empty()) return {};
  return split_string(body, '\t');
}

}  // namespace

std::string_view column_kind_name(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kNumeric: return "numeric";
    case ColumnKind::kOneHot: return "onehot";
    case ColumnKind::kMultiHot: return "multihot";
    case ColumnKind::kBinary: return "binary";
  }
  return {};
}

std::vector<ColumnDesc> tabular_layout() {
  std::vector<ColumnDesc> cols;
  add_one_hot<PrimaryPurpose>(cols, ColumnKind::kOneHot, true);
  add_one_hot<Masking>(cols, ColumnKind::kOneHot, true);
  add_one_hot<Sex>(cols, ColumnKind::kOneHot, true);
  add_one_hot<Phase>(cols, ColumnKind::kMultiHot, false);
  add_one_hot<ArmGroupType>(cols, ColumnKind::kMultiHot, false);
  add_one_hot<InterventionType>(cols, ColumnKind::kMultiHot, false);
  cols.push_back({"healthyVolunteers", ColumnKind::kBinary});
  cols.push_back({"oversightHasDmc", ColumnKind::kBinary});
  for (const char* name : {"enrollmentCount", "numArms", "numInterventions", "numLocations"}) {
    cols.push_back({name, ColumnKind::kNumeric});
  }
  return cols;
}

TabularMatrix build_tabular_matrix(std::span<const FeatureRow> rows) {
  if (rows.empty()) throw EmptyInput("no feature rows");
  TabularMatrix m;
  m.columns = tabular_layout();
  m.values.assign(rows.size() * m.cols(), 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    m.row_ids.push_back(f.nct_id);
    double* cell = &m.values[r * m.cols()];
    cell = fill_one_hot(cell, f.primary_purpose);
    cell = fill_one_hot(cell, f.masking);
    cell = fill_one_hot(cell, f.sex);
    cell = fill_multi_hot(cell, f.phases);
    cell = fill_multi_hot(cell, f.arm_group_types);
    cell = fill_multi_hot(cell, f.intervention_types);
    *cell++ = binary(f.healthy_volunteers);
    *cell++ = binary(f.oversight_has_dmc);
    *cell++ = numeric(f.enrollment_count);
    *cell++ = numeric(f.num_arms);
    *cell++ = numeric(f.num_interventions);
    *cell++ = numeric(f.num_locations);
  }
  return m;
}

void TextMatrix::push_row(std::string id, std::span<const std::uint32_t> idx, std::span<const double> val) {
  row_ids.push_back(std::move(id));
  indices.insert(indices.end(), idx.begin(), idx.end());
  values.insert(values.end(), val.begin(), val.end());
  row_ptr.push_back(indices.size());
}

double IdfStats::idf(std::uint32_t bucket) const {
  const auto it = std::lower_bound(df.begin(), df.end(), std::pair<std::uint32_t, std::uint32_t>{bucket, 0});
  const double d = (it != df.end() && it->first == bucket) ? it->second : 0.0;
  const double n = static_cast<double>(n_docs);
  if (config.idf == IdfConvention::kSmooth) return std::log((1.0 + n) / (1.0 + d)) + 1.0;
  return d > 0.0 ? std::log(n / d) : 0.0;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : ch);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::uint32_t hash_bucket(std::string_view field, std::string_view ngram, std::size_t dim) {
  std::uint64_t h = fnv1a64(field);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(ngram, h);
  return static_cast<std::uint32_t>(mix64(h) & (dim - 1));
}

TextFit fit_text_vectorizer(std::span<const FeatureRow> rows, const TextVectorizerConfig& config) {
  check_config(config);
  IdfStats stats;
  stats.config = config;
  stats.n_docs = rows.size();
  std::map<std::uint32_t, std::uint32_t> df;
  for (const auto& row : rows) {
    for (const auto& [bucket, tf] : hashed_counts(row, config)) ++df[bucket];
  }
  stats.df.assign(df.begin(), df.end());
  stats.train_fingerprint = fingerprint_rows(rows);
  TextMatrix matrix = weigh(rows, stats);
  return {std::move(matrix), std::move(stats)};
}

TextMatrix transform_text(std::span<const FeatureRow> rows, const std::optional<IdfStats>& idf) {
  if (!idf) throw MissingIdfStats("transforming text requires statistics from a training fit");
  check_config(idf->config);
  return weigh(rows, *idf);
}

std::string tabular_to_string(const TabularMatrix& m) {
  std::ostringstream out;
  out << "%ctdr-matrix v1 kind=tabular rows=" << m.rows() << " cols=" << m.cols() << '\n';
  out << "%columns";
  for (std::size_t c = 0; c < m.cols(); ++c) {
    out << (c == 0 ? " " : "\t") << m.columns[c].name << ':' << column_kind_name(m.columns[c].kind);
  }
  out << "\n%rows";
  for (std::size_t r = 0; r < m.rows(); ++r) out << (r == 0 ? " " : "\t") << m.row_ids[r];
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double v = m.at(r, c);
      if (std::isnan(v)) out << r << ' ' << c << " NA\n";
      else if (v != 0.0) out << r << ' ' << c << ' ' << format_double(v) << '\n';
    }
  }
  return out.str();
}

TabularMatrix tabular_from_string(const std::string& text) {
  const auto lines = split_string(text, '\n');
  if (lines.size() < 3) throw SchemaVersionMismatch("truncated matrix file");
  const auto h = parse_header(lines[0]);
  if (h.kind != "tabular") throw SchemaVersionMismatch("expected a tabular matrix, got '" + h.kind + "'");
  TabularMatrix m;
  for (const auto& c : tab_list(lines[1], "%columns ")) {
    const auto colon = c.rfind(':');
    m.columns.push_back({c.substr(0, colon), column_kind_from_name(c.substr(colon + 1))});
  }
  if (h.rows > 0) m.row_ids = tab_list(lines[2], "%rows ");
  if (m.rows() != h.rows || m.cols() != h.cols) throw SchemaVersionMismatch("matrix header disagrees with body");
  m.values.assign(h.rows * h.cols, 0.0);
  for (std::size_t i = 3; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::istringstream in(lines[i]);
    std::size_t r = 0, c = 0;
    std::string v;
    if (!(in >> r >> c >> v) || r >= h.rows || c >= h.cols) throw SchemaVersionMismatch("bad matrix cell: " + lines[i]);
    m.values[r * h.cols + c] = v == "NA" ? TabularMatrix::kMissing : std::stod(v);
  }
  return m;
}

std::string text_matrix_to_string(const TextMatrix& m) {
  std::ostringstream out;
  out << "%ctdr-matrix v1 kind=text rows=" << m.rows() << " cols=" << m.dim << '\n';
  out << "%rows";
  for (std::size_t r = 0; r < m.rows(); ++r) out << (r == 0 ? " " : "\t") << m.row_ids[r];
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto idx = m.row_indices(r);
    const auto val = m.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) out << r << ' ' << idx[k] << ' ' << format_double(val[k]) << '\n';
  }
  return out.str();
}

TextMatrix text_matrix_from_string(const std::string& text) {
  const auto lines = split_string(text, '\n');
  if (lines.size() < 2) throw SchemaVersionMismatch("truncated matrix file");
  const auto h = parse_header(lines[0]);
  if (h.kind != "text") throw SchemaVersionMismatch("expected a text matrix, got '" + h.kind + "'");
  std::vector<std::string> ids;
  if (h.rows > 0) ids = tab_list(lines[1], "%rows ");
  if (ids.size() != h.rows) throw SchemaVersionMismatch("matrix header disagrees with body");
  std::vector<std::vector<std::pair<std::uint32_t, double>>> cells(h.rows);
  for (std::size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::istringstream in(lines[i]);
    std::size_t r = 0;
    std::uint32_t c = 0;
    std::string v;
    if (!(in >> r >> c >> v) || r >= h.rows || c >= h.cols) throw SchemaVersionMismatch("bad matrix cell: " + lines[i]);
    cells[r].emplace_back(c, std::stod(v));
  }
  TextMatrix m;
  m.dim = h.cols;
  for (std::size_t r = 0; r < h.rows; ++r) {
    std::sort(cells[r].begin(), cells[r].end());
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    for (const auto& [c, v] : cells[r]) {
      idx.push_back(c);
      val.push_back(v);
    }
    m.push_row(ids[r], idx, val);
  }
  return m;
}

std::string idf_stats_to_json(const IdfStats& s) {
  nlohmann::ordered_json j;
  j["format"] = "ctdr.idf";
  j["version"] = 1;
  j["dim"] = s.config.dim;
  j["ngram_max"] = s.config.ngram_max;
  j["convention"] = s.config.idf == IdfConvention::kSmooth ? "smooth" : "plain";
  j["n_docs"] = s.n_docs;
  j["train_fingerprint"] = s.train_fingerprint;
  nlohmann::ordered_json df = nlohmann::ordered_json::array();
  for (const auto& [b, c] : s.df) df.push_back({b, c});
  j["df"] = df;
  return j.dump() + "\n";
}

IdfStats idf_stats_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaVersionMismatch(std::string("idf stats: ") + e.what());
  }
  if (j.value("format", "") != "ctdr.idf" || j.value("version", 0) != 1) {
    throw SchemaVersionMismatch("not a ctdr.idf v1 file");
  }
  IdfStats s;
  s.config.dim = j.at("dim").get<std::size_t>();
  s.config.ngram_max = j.at("ngram_max").get<int>();
  s.config.idf = j.at("convention") == "plain" ? IdfConvention::kPlain : IdfConvention::kSmooth;
  s.n_docs = j.at("n_docs").get<std::size_t>();
  s.train_fingerprint = j.at("train_fingerprint").get<std::string>();
  for (const auto& e : j.at("df")) s.df.emplace_back(e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>());
  return s;
}

}  // namespace ctdr
