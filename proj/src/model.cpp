// SPDX-License-Identifier: Apache-2.0
#include "handproof/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace handproof {

namespace {

std::vector<FeatureSequence> featurize(const Dataset& samples, Representation repr,
                                       Eigen::Index capacity) {
  std::vector<FeatureSequence> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(pad_or_truncate(to_features(s.trajectory, repr), capacity));
  return out;
}

// Step-major batch: column t * B + b holds row t of sequence b.
Eigen::MatrixXd pack(const std::vector<FeatureSequence>& seqs, std::span<const std::size_t> index) {
  const Eigen::Index B = static_cast<Eigen::Index>(index.size());
  const Eigen::Index T = seqs[index[0]].rows();
  const Eigen::Index I = seqs[index[0]].values.cols();
  Eigen::MatrixXd x(I, T * B);
  for (Eigen::Index s = 0; s < B; ++s) {
    const auto& v = seqs[index[static_cast<std::size_t>(s)]].values;
    for (Eigen::Index t = 0; t < T; ++t) x.col(t * B + s) = v.row(t).transpose();
  }
  return x;
}

std::vector<Eigen::Index> readout_steps(const std::vector<FeatureSequence>& seqs,
                                        std::span<const std::size_t> index, bool masked) {
  if (!masked) return {};
  std::vector<Eigen::Index> steps;
  steps.reserve(index.size());
  for (const auto i : index) steps.push_back(std::max<Eigen::Index>(seqs[i].mask_length, 1));
  return steps;
}

double probability_of(const GruModel& model, const FeatureSequence& seq) {
  const Eigen::MatrixXd x = seq.values.transpose();
  std::vector<Eigen::Index> step;
  if (model.masked_readout) step.push_back(std::max<Eigen::Index>(seq.mask_length, 1));
  const auto cache = gru_forward<double>(model.params, x, 1, step, 0.0, nullptr);
  return cache.probability[0];
}

bool has_both_labels(const Dataset& d) {
  bool human = false, synth = false;
  for (const auto& s : d) (s.label == Label::Human ? human : synth) = true;
  return human && synth;
}

}  // namespace

void GruModel::check() const {
  const Eigen::Index H = params.hidden_dim();
  if (H <= 0 || params.W.rows() != 3 * H || params.U.rows() != 3 * H || params.b.size() != 3 * H ||
      params.w_out.size() != H) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent weight shapes");
  }
  if (params.input_dim() != feature_width(representation)) {
    throw Error(ErrorCode::DimensionMismatch, "input width does not match the representation");
  }
  if (stats.mean.size() != params.input_dim() || stats.stddev.size() != params.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "channel stats do not match the input width");
  }
  if (!params.all_finite() || !stats.mean.allFinite() || !stats.stddev.allFinite()) {
    throw Error(ErrorCode::NonFiniteValue, "model contains non-finite values");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
  }
  if (capacity <= 0) throw Error(ErrorCode::InvalidArgument, "capacity must be positive");
}

void TrainConfig::check() const {
  if (!(adam.learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  if (max_epochs < 1) throw Error(ErrorCode::InvalidArgument, "max_epochs must be positive");
  if (patience < 1 || patience > max_epochs) {
    throw Error(ErrorCode::InvalidArgument, "patience must lie in [1, max_epochs]");
  }
  if (seq_capacity <= 0 || hidden_dim <= 0) {
    throw Error(ErrorCode::InvalidArgument, "capacity and hidden size must be positive");
  }
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("adam_epsilon", c.adam.epsilon);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.dropout = j.value("dropout", c.dropout);
  c.seq_capacity = j.value("seq_capacity", c.seq_capacity);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.masked_readout = j.value("masked_readout", c.masked_readout);
  c.seed = j.value("seed", c.seed);
  c.check();
  return c;
}

bool EarlyStopping::update(int epoch, double value) {
  if (best_epoch_ == 0 || value > best_) {
    best_ = value;
    best_epoch_ = epoch;
    return true;
  }
  return false;
}

TrainResult train(const Dataset& train_set, const Dataset& val_set, Representation repr,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.check();
  if (train_set.empty()) throw Error(ErrorCode::EmptyTrainingSet, "training set is empty");
  if (!has_both_labels(train_set)) throw Error(ErrorCode::SingleClass, "training set holds one class only");
  if (val_set.empty()) throw Error(ErrorCode::EmptyTrainingSet, "validation set is empty");

  auto train_seqs = featurize(train_set, repr, config.seq_capacity);
  auto val_seqs = featurize(val_set, repr, config.seq_capacity);

  TrainResult result;
  GruModel& model = result.model;
  model.representation = repr;
  model.capacity = config.seq_capacity;
  model.masked_readout = config.masked_readout;
  model.stats = fit_standardizer(train_seqs);
  for (auto& s : train_seqs) s = apply_standardizer(s, model.stats);
  for (auto& s : val_seqs) s = apply_standardizer(s, model.stats);

  Rng init_rng(derive_seed(config.seed, 1));
  Rng shuffle_rng(derive_seed(config.seed, 2));
  Rng dropout_rng(derive_seed(config.seed, 3));
  model.params = initialize_gru<double>(feature_width(repr), config.hidden_dim, init_rng);

  std::vector<int> targets(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) targets[i] = as_target(train_set[i].label);

  auto state = AdamState<double>::zeros_like(model.params);
  GruParams<double> best = model.params;
  EarlyStopping stopping(config.patience);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> batch_targets;
  long step = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> index(order.data() + begin, end - begin);
      batch_targets.clear();
      for (const auto i : index) batch_targets.push_back(targets[i]);
      const Eigen::MatrixXd x = pack(train_seqs, index);
      const auto steps = readout_steps(train_seqs, index, config.masked_readout);
      const auto cache = gru_forward<double>(model.params, x, static_cast<Eigen::Index>(index.size()),
                                             steps, config.dropout, &dropout_rng);
      loss_sum += mean_bce(cache.probability, batch_targets) * static_cast<double>(index.size());
      const auto grads = gru_backward(model.params, cache, batch_targets);
      adam_update(model.params, grads, state, ++step, config.adam);
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < val_seqs.size(); ++i) {
      const bool synthetic = probability_of(model, val_seqs[i]) > model.threshold;
      correct += synthetic == (val_set[i].label == Label::Synthetic) ? 1 : 0;
    }
    EpochRecord record{epoch, loss_sum / static_cast<double>(order.size()),
                       static_cast<double>(correct) / static_cast<double>(val_seqs.size())};
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);
    if (stopping.update(epoch, record.val_accuracy)) best = model.params;
    if (stopping.should_stop(epoch)) break;
  }

  model.params = std::move(best);
  result.best_epoch = stopping.best_epoch();
  result.best_val_accuracy = stopping.best_value();
  return result;
}

FeatureSequence prepare_features(const GruModel& model, const Trajectory& trajectory) {
  return apply_standardizer(
      pad_or_truncate(to_features(trajectory, model.representation), model.capacity), model.stats);
}

Prediction predict(const GruModel& model, const Trajectory& trajectory) {
  Prediction p;
  p.probability = probability_of(model, prepare_features(model, trajectory));
  p.verdict = p.probability > model.threshold ? Label::Synthetic : Label::Human;
  return p;
}

Prediction predict(const GruModel& model, std::span<const Point> points) {
  return predict(model, validate(points, true));
}

std::vector<double> predict_probabilities(const GruModel& model, const Dataset& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(predict(model, s.trajectory.points()).probability);
  return out;
}

// ---------------------------------------------------------------- persistence

namespace {

constexpr const char* kGateNames[3] = {"z", "r", "h"};

nlohmann::json row_major(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  }
  return a;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::CorruptFile, std::string("model file lacks \"") + key + "\"");
  }
  return j.at(key);
}

std::vector<double> numbers(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) throw Error(ErrorCode::CorruptFile, name + " is not an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw Error(ErrorCode::CorruptFile, name + " holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

void fill(Eigen::Ref<Eigen::MatrixXd> m, const nlohmann::json& j, const std::string& name) {
  const auto v = numbers(j, name);
  if (static_cast<Eigen::Index>(v.size()) != m.size()) {
    throw Error(ErrorCode::DimensionMismatch, name + " has " + std::to_string(v.size()) +
                                                  " values, expected " + std::to_string(m.size()));
  }
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = v[k++];
  }
}

}  // namespace

nlohmann::json model_metadata(const GruModel& model) {
  return {{"format_version", kModelFormatVersion},
          {"representation", std::string(to_string(model.representation))},
          {"dims",
           {{"input", model.input_dim()}, {"hidden", model.hidden_dim()}, {"capacity", model.capacity}}},
          {"masked_readout", model.masked_readout},
          {"stats", {{"mean", vector_json(model.stats.mean)}, {"stddev", vector_json(model.stats.stddev)}}},
          {"threshold", model.threshold}};
}

nlohmann::json model_to_json(const GruModel& model) {
  model.check();
  nlohmann::json j = model_metadata(model);
  const Eigen::Index H = model.hidden_dim();
  nlohmann::json w = nlohmann::json::object();
  for (int g = 0; g < 3; ++g) {
    w[std::string("W_") + kGateNames[g]] = row_major(model.params.W.middleRows(g * H, H));
    w[std::string("U_") + kGateNames[g]] = row_major(model.params.U.middleRows(g * H, H));
    w[std::string("b_") + kGateNames[g]] = vector_json(model.params.b.segment(g * H, H));
  }
  w["w_o"] = vector_json(model.params.w_out);
  w["b_o"] = nlohmann::json::array({model.params.b_out(0)});
  j["weights"] = std::move(w);
  return j;
}

GruModel model_from_json(const nlohmann::json& j) {
  const auto& version = require(j, "format_version");
  if (!version.is_number_integer()) throw Error(ErrorCode::CorruptFile, "format_version is not an integer");
  if (version.get<long long>() != kModelFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion,
                "unsupported model format_version " + std::to_string(version.get<long long>()));
  }
  GruModel model;
  try {
    const auto& repr = require(j, "representation");
    if (!repr.is_string()) throw Error(ErrorCode::CorruptFile, "representation is not a string");
    model.representation = parse_representation(repr.get<std::string>());
    const auto& dims = require(j, "dims");
    const auto input = require(dims, "input").get<Eigen::Index>();
    const auto hidden = require(dims, "hidden").get<Eigen::Index>();
    model.capacity = dims.value("capacity", kSequenceCapacity);
    model.masked_readout = j.value("masked_readout", false);
    model.threshold = require(j, "threshold").get<double>();
    if (input <= 0 || hidden <= 0) throw Error(ErrorCode::CorruptFile, "non-positive dimensions");
    if (input != feature_width(model.representation)) {
      throw Error(ErrorCode::DimensionMismatch, "input width does not match the representation");
    }
    const auto& stats = require(j, "stats");
    model.stats = ChannelStats::identity(input);
    fill(model.stats.mean, require(stats, "mean"), "stats.mean");
    fill(model.stats.stddev, require(stats, "stddev"), "stats.stddev");

    model.params = GruParams<double>::zeros(input, hidden);
    const auto& w = require(j, "weights");
    for (int g = 0; g < 3; ++g) {
      const std::string gate = kGateNames[g];
      fill(model.params.W.middleRows(g * hidden, hidden), require(w, ("W_" + gate).c_str()), "W_" + gate);
      fill(model.params.U.middleRows(g * hidden, hidden), require(w, ("U_" + gate).c_str()), "U_" + gate);
      fill(model.params.b.segment(g * hidden, hidden), require(w, ("b_" + gate).c_str()), "b_" + gate);
    }
    fill(model.params.w_out, require(w, "w_o"), "w_o");
    fill(model.params.b_out, require(w, "b_o"), "b_o");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed model file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::CorruptFile, e.what());
    throw;
  }
  try {
    model.check();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DimensionMismatch) throw;
    throw Error(ErrorCode::CorruptFile, e.what());
  }
  return model;
}

void save_model(const GruModel& model, const std::filesystem::path& path) {
  const std::string text = model_to_json(model).dump() + "\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace {

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

GruModel load_model(const std::filesystem::path& path) {
  const std::string text = read_all(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
  return out;
}

std::string model_file_id(const std::filesystem::path& path) { return fnv1a_hex(read_all(path)); }

}  // namespace handproof
