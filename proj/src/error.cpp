// SPDX-License-Identifier: Apache-2.0
#include "handproof/error.hpp"

namespace handproof {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::TooFewPoints: return "too_few_points";
    case ErrorCode::NonMonotonicTime: return "non_monotonic_time";
    case ErrorCode::NonFiniteValue: return "non_finite_value";
    case ErrorCode::DegenerateDuration: return "degenerate_duration";
    case ErrorCode::EmptyTrainingSet: return "empty_training_set";
    case ErrorCode::EmptyPlan: return "empty_plan";
    case ErrorCode::ExtractionFailed: return "extraction_failed";
    case ErrorCode::LengthMismatch: return "length_mismatch";
    case ErrorCode::NonPositiveDuration: return "non_positive_duration";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::StaleCache: return "stale_cache";
    case ErrorCode::SingleClass: return "single_class";
    case ErrorCode::UnsupportedVersion: return "unsupported_version";
    case ErrorCode::CorruptFile: return "corrupt_file";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::IoError: return "io_error";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::MalformedXml: return "malformed_xml";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::MissingDataset: return "missing_dataset";
    case ErrorCode::InvalidArgument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace handproof
