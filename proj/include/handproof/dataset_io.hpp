// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>

#include "handproof/sample.hpp"

namespace handproof {

/// One LabeledSample per line:
/// {"id": str, "label": "human"|"synthetic", "source": str,
///  "points": [[x, y, t_seconds], ...]}
/// Unknown keys are kept in LabeledSample::extra. Points are validated with
/// repair off; errors carry the 1-based line number.
Dataset read_jsonl(const std::filesystem::path& path);

/// Writes the canonical records. Returns the number of `extra` keys that
/// were dropped.
std::size_t write_jsonl(const Dataset& samples, const std::filesystem::path& path);

nlohmann::json sample_to_json(const LabeledSample& sample);
LabeledSample sample_from_json(const nlohmann::json& record);

nlohmann::json points_to_json(const Trajectory& trajectory);
std::vector<Point> points_from_json(const nlohmann::json& points);

struct GdsLoadResult {
  Dataset samples;
  std::size_t files = 0;
  std::size_t skipped = 0;
};

/// Loads a directory tree of $1 unistroke gesture logs (<Gesture> elements
/// with <Point X= Y= T=> children, T in milliseconds). Each file becomes a
/// human sample tagged "$1-GDS"; time is rebased to the first point and
/// converted to seconds. Files failing validation (with repair) are skipped.
GdsLoadResult load_gds_xml(const std::filesystem::path& directory);

struct Percentiles {
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

struct DatasetSummary {
  std::size_t total = 0;
  std::map<std::string, std::size_t> per_source;
  std::map<std::string, std::size_t> per_label;
  Percentiles length;    // points per sample
  Percentiles duration;  // seconds
  /// Fraction of samples with more than 400 feature rows.
  double truncation_exposure = 0.0;
};

DatasetSummary dataset_stats(const Dataset& dataset);
nlohmann::json to_json(const DatasetSummary& summary);

}  // namespace handproof
