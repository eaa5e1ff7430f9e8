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

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctdr {

using Date = std::chrono::year_month_day;

/// Parses "YYYY-MM-DD" or "YYYY-MM". Year-month dates resolve to the first
/// of the month. Returns nullopt on anything else.
std::optional<Date> parse_date(std::string_view text);

/// Formats as "YYYY-MM-DD".
std::string format_date(const Date& date);

/// Days since 1970-01-01.
std::int64_t day_number(const Date& date);

/// SplitMix64 (Steele, Lea and Flood 2014). Every seeded random decision in
/// the library draws from this generator so runs reproduce bit-for-bit on any
/// platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t state_;
};

/// One SplitMix64 output for the given input; used to derive keyed
/// pseudo-random decisions that do not depend on iteration order.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Incremental content fingerprint rendered as 16 hex digits.
class Fingerprint {
 public:
  Fingerprint& add(std::string_view bytes);
  Fingerprint& add(double value);
  Fingerprint& add(std::int64_t value);
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t value);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Reads a whole file; throws IoError.
std::string read_file(const std::string& path);

/// Writes a whole file, creating parent directories; throws IoError.
void write_file(const std::string& path, std::string_view contents);

std::vector<std::string> split_string(std::string_view text, char sep);
std::string trim(std::string_view text);

}  // namespace ctdr
