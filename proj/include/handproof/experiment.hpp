// SPDX-License-Identifier: Apache-2.0
//
// Stratified splitting and the four evaluation protocols: detect, fewshot,
// ood and combined.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "handproof/model.hpp"
#include "handproof/sample.hpp"

namespace handproof {

struct Split {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Per-label seeded shuffle, then per-label largest-remainder allocation of
/// the three ratios (remainder ties go to the earlier split).
Split stratified_split(const Dataset& dataset, std::array<double, 3> ratios, std::uint64_t seed);

/// Per-label seeded selection of round(fraction * count) samples, largest
/// remainder across the two parts. Returns (selected, rest).
std::pair<Dataset, Dataset> stratified_sample(const Dataset& dataset, double fraction,
                                              std::uint64_t seed);

/// Seeded subsample of the majority class down to the minority count.
Dataset balance_classes(const Dataset& dataset, std::uint64_t seed);

enum class Mode { Detect, Fewshot, Ood, Combined };
std::string_view to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view name);

struct MetricsReport {
  Mode mode = Mode::Detect;
  std::string source;
  std::string target;
  Representation representation = Representation::Delta;
  std::string synthesizer;
  double auc = 0.0;
  double eer = 0.0;
  double balanced_accuracy = 0.0;
  double f_score = 0.0;
  long n_pos = 0;
  long n_neg = 0;
  std::uint64_t seed = 0;
};

/// Scores a trained model on `test`. With `weighted` the F-score is the
/// support-weighted mean over both classes.
MetricsReport score_model(const GruModel& model, const Dataset& test, bool weighted = false);

struct NamedDataset {
  std::string name;
  std::string synthesizer;
  Dataset samples;
};

struct ExperimentConfig {
  Mode mode = Mode::Detect;
  Representation representation = Representation::Delta;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::vector<NamedDataset> datasets;
  /// Training share for fewshot.
  double fraction = 0.1;
  /// Source dataset for ood.
  std::string source;
  /// Class balancing for combined.
  bool balance = true;
};

/// Reads an experiment file. Dataset paths are resolved against the file's
/// directory; the JSONL files are loaded.
ExperimentConfig load_experiment(const std::filesystem::path& path);
ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

struct ExperimentResult {
  MetricsReport report;
  GruModel model;
};

std::vector<ExperimentResult> run_experiment(const ExperimentConfig& config,
                                             const EpochCallback& on_epoch = {});

/// Trains on the train/val parts of `split` and scores the test part.
ExperimentResult train_and_score(const Split& split, Representation repr, const TrainConfig& train,
                                 bool weighted = false, const EpochCallback& on_epoch = {});

inline constexpr const char* kReportColumns =
    "mode,source,target,representation,synthesizer,auc,eer,bal_acc,f1,n_pos,n_neg,seed";

void write_report_csv(std::ostream& out, const std::vector<MetricsReport>& reports);
nlohmann::json to_json(const MetricsReport& report);

}  // namespace handproof
