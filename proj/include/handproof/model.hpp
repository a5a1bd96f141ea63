// SPDX-License-Identifier: Apache-2.0
//
// Trained detector: GRU parameters plus the feature pipeline that feeds
// them. Training loop, prediction and the JSON model file.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "handproof/gru.hpp"
#include "handproof/sample.hpp"
#include "handproof/trajectory.hpp"

namespace handproof {

inline constexpr int kModelFormatVersion = 1;
inline constexpr Eigen::Index kDefaultHidden = 100;

struct GruModel {
  GruParams<double> params;
  Representation representation = Representation::Delta;
  ChannelStats stats;
  double threshold = 0.5;
  Eigen::Index capacity = kSequenceCapacity;
  /// Read the hidden state at the last real row instead of the last padded row.
  bool masked_readout = false;

  Eigen::Index input_dim() const { return params.input_dim(); }
  Eigen::Index hidden_dim() const { return params.hidden_dim(); }
  /// Throws DimensionMismatch / InvalidArgument when the fields disagree.
  void check() const;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 128;
  int max_epochs = 400;
  int patience = 40;
  double dropout = 0.25;
  Eigen::Index seq_capacity = kSequenceCapacity;
  Eigen::Index hidden_dim = kDefaultHidden;
  bool masked_readout = false;
  std::uint64_t seed = 0;

  void check() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  GruModel model;
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

/// Tracks the best monitored value; ties keep the earlier epoch.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true when `value` strictly improves on the best so far.
  bool update(int epoch, double value);
  bool should_stop(int epoch) const { return best_epoch_ > 0 && epoch - best_epoch_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_ = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const Dataset& train_set, const Dataset& val_set, Representation repr,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Feature rows exactly as the network sees them: representation,
/// truncation/padding to capacity, standardization.
FeatureSequence prepare_features(const GruModel& model, const Trajectory& trajectory);

struct Prediction {
  double probability = 0.0;
  Label verdict = Label::Human;
};

/// Validates `points` with repair, then runs the model without dropout.
/// The verdict is synthetic iff probability > threshold.
Prediction predict(const GruModel& model, std::span<const Point> points);
Prediction predict(const GruModel& model, const Trajectory& trajectory);

/// Probabilities for many trajectories; each equals predict() bit-exactly.
std::vector<double> predict_probabilities(const GruModel& model, const Dataset& samples);

nlohmann::json model_to_json(const GruModel& model);
GruModel model_from_json(const nlohmann::json& j);
/// Model metadata without weights.
nlohmann::json model_metadata(const GruModel& model);

void save_model(const GruModel& model, const std::filesystem::path& path);
GruModel load_model(const std::filesystem::path& path);

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
/// Identifier of a model file: FNV-1a of its contents.
std::string model_file_id(const std::filesystem::path& path);

}  // namespace handproof
