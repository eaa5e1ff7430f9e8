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

#include <stdexcept>
#include <string>

namespace ctdr {

/// Process exit codes used by the CLI.
enum class ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kData = 2,
  kInternal = 3,
};

/// Base of every error raised by the library. The exit code tells the CLI
/// how to report it.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what, ExitCode code)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), code_(code) {}

  const std::string& kind() const noexcept { return kind_; }
  ExitCode exit_code() const noexcept { return code_; }

 private:
  std::string kind_;
  ExitCode code_;
};

#define CTDR_DEFINE_ERROR(Name, Code)                                        \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what) : Error(#Name, what, Code) {}     \
  }

// registry ingest
CTDR_DEFINE_ERROR(MalformedDocument, ExitCode::kData);
CTDR_DEFINE_ERROR(InvalidEnumValue, ExitCode::kData);
CTDR_DEFINE_ERROR(ConstraintViolation, ExitCode::kData);
CTDR_DEFINE_ERROR(UnknownCategory, ExitCode::kData);
CTDR_DEFINE_ERROR(IoError, ExitCode::kData);
CTDR_DEFINE_ERROR(SchemaVersionMismatch, ExitCode::kData);
// labeling
CTDR_DEFINE_ERROR(EmptyTermList, ExitCode::kData);
CTDR_DEFINE_ERROR(NoAtRiskPopulation, ExitCode::kData);
CTDR_DEFINE_ERROR(InvalidCounts, ExitCode::kData);
// splitting
CTDR_DEFINE_ERROR(EmptyDataset, ExitCode::kData);
CTDR_DEFINE_ERROR(MissingStartDate, ExitCode::kData);
CTDR_DEFINE_ERROR(InsufficientSamples, ExitCode::kData);
// features and models
CTDR_DEFINE_ERROR(MissingIdfStats, ExitCode::kData);
CTDR_DEFINE_ERROR(DegenerateLabels, ExitCode::kData);
CTDR_DEFINE_ERROR(DimensionMismatch, ExitCode::kInternal);
CTDR_DEFINE_ERROR(NonFinite, ExitCode::kData);
CTDR_DEFINE_ERROR(EmptyInput, ExitCode::kData);
CTDR_DEFINE_ERROR(LengthMismatch, ExitCode::kInternal);
CTDR_DEFINE_ERROR(SingleClass, ExitCode::kData);
// pipeline
CTDR_DEFINE_ERROR(MissingUpstreamArtifact, ExitCode::kData);
CTDR_DEFINE_ERROR(FingerprintMismatch, ExitCode::kData);
CTDR_DEFINE_ERROR(ConfigError, ExitCode::kUsage);

#undef CTDR_DEFINE_ERROR

/// A pipeline stage's error, keeping the cause's kind and exit code.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const Error& cause)
      : Error(cause.kind(), "stage " + stage + ": " + strip_kind(cause), cause.exit_code()), stage_(stage) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  static std::string strip_kind(const Error& e) {
    const std::string what = e.what();
    const std::string prefix = e.kind() + ": ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
  }

  std::string stage_;
};

}  // namespace ctdr
