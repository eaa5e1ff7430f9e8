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

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctdr/dataset.hpp"

namespace ctdr {

enum class ColumnKind { kNumeric, kOneHot, kMultiHot, kBinary };

std::string_view column_kind_name(ColumnKind kind);

struct ColumnDesc {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;

  bool operator==(const ColumnDesc&) const = default;
};

/// Dense row-major design matrix. NaN is the missing cell state; it is never
/// produced by arithmetic here, only by absent source fields.
struct TabularMatrix {
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::string> row_ids;
  std::vector<ColumnDesc> columns;
  std::vector<double> values;

  std::size_t rows() const { return row_ids.size(); }
  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  bool is_missing(std::size_t r, std::size_t c) const { return std::isnan(at(r, c)); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols(), cols());
  }
};

/// The fixed column layout: single-label categoricals one-hot in id order
/// plus a "_missing" column, multi-label categoricals multi-hot, binaries,
/// then numeric counts. Depends on nothing but the encoding tables.
std::vector<ColumnDesc> tabular_layout();

/// Throws EmptyInput for no rows.
TabularMatrix build_tabular_matrix(std::span<const FeatureRow> rows);

/// Sparse rows (CSR) of hashed n-gram tf-idf weights, each row L2-normalized.
struct TextMatrix {
  std::vector<std::string> row_ids;
  std::size_t dim = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t rows() const { return row_ids.size(); }
  std::span<const std::uint32_t> row_indices(std::size_t r) const {
    return std::span<const std::uint32_t>(indices).subspan(row_ptr[r], row_ptr[r + 1] - row_ptr[r]);
  }
  std::span<const double> row_values(std::size_t r) const {
    return std::span<const double>(values).subspan(row_ptr[r], row_ptr[r + 1] - row_ptr[r]);
  }
  /// Appends one row; indices must be sorted ascending.
  void push_row(std::string id, std::span<const std::uint32_t> idx, std::span<const double> val);
};

/// smooth: ln((1 + N) / (1 + df)) + 1.  plain: ln(N / df), 0 for unseen buckets.
enum class IdfConvention { kSmooth, kPlain };

struct TextVectorizerConfig {
  std::size_t dim = std::size_t{1} << 18;
  int ngram_max = 2;
  IdfConvention idf = IdfConvention::kSmooth;

  bool operator==(const TextVectorizerConfig&) const = default;
};

/// Document frequencies per hash bucket from the training rows.
struct IdfStats {
  TextVectorizerConfig config;
  std::size_t n_docs = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> df;  // (bucket, count), bucket ascending
  std::string train_fingerprint;

  double idf(std::uint32_t bucket) const;
  bool operator==(const IdfStats&) const = default;
};

/// The literal token standing in for a missing text field.
inline constexpr std::string_view kUnknownToken = "UNKNOWN";

/// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters.
std::vector<std::string> tokenize(std::string_view text);

/// Hash bucket of an n-gram (tokens joined by one space) within a field.
std::uint32_t hash_bucket(std::string_view field, std::string_view ngram, std::size_t dim);

struct TextFit {
  TextMatrix matrix;
  IdfStats idf;
};

/// Fits document frequencies on \p rows and transforms them. Throws
/// ConfigError unless dim is a power of two and ngram_max >= 1.
TextFit fit_text_vectorizer(std::span<const FeatureRow> rows, const TextVectorizerConfig& config);

/// Transforms with statistics from a previous fit. Throws MissingIdfStats
/// when \p idf is empty.
TextMatrix transform_text(std::span<const FeatureRow> rows, const std::optional<IdfStats>& idf);

// Sparse triplet text format: a "%ctdr-matrix" header with kind, rows and
// cols, the column descriptors (tabular only), the row ids, then one
// "row col value" line per stored cell. Missing tabular cells are "NA".
std::string tabular_to_string(const TabularMatrix& m);
TabularMatrix tabular_from_string(const std::string& text);
std::string text_matrix_to_string(const TextMatrix& m);
TextMatrix text_matrix_from_string(const std::string& text);

std::string idf_stats_to_json(const IdfStats& stats);
IdfStats idf_stats_from_json(const std::string& text);

}  // namespace ctdr
