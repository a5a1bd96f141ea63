// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace handproof {

enum class ErrorCode {
  TooFewPoints,
  NonMonotonicTime,
  NonFiniteValue,
  DegenerateDuration,
  EmptyTrainingSet,
  EmptyPlan,
  ExtractionFailed,
  LengthMismatch,
  NonPositiveDuration,
  DimensionMismatch,
  StaleCache,
  SingleClass,
  UnsupportedVersion,
  CorruptFile,
  ParseError,
  IoError,
  NotFound,
  MalformedXml,
  EmptyDataset,
  MissingDataset,
  InvalidArgument,
};

/// Machine-readable snake_case name, used by the service error payloads.
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace handproof
