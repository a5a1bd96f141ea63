// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "handproof/model.hpp"

using namespace handproof;

namespace {

// Class 0 stands still, class 1 moves at a constant velocity.
Dataset toy_task(std::uint64_t seed, int per_class) {
  Rng rng(seed);
  Dataset out;
  for (int i = 0; i < 2 * per_class; ++i) {
    const bool moving = i % 2 == 1;
    const double x0 = rng.uniform(-5, 5), y0 = rng.uniform(-5, 5);
    const double vx = rng.uniform(-3, 3), vy = rng.uniform(1, 3);
    const int n = 8 + static_cast<int>(rng.below(10));
    std::vector<Point> pts;
    for (int k = 0; k < n; ++k) {
      const double t = 0.01 * k;
      pts.push_back(moving ? Point{x0 + vx * k, y0 + vy * k, t} : Point{x0, y0, t});
    }
    out.push_back({"toy-" + std::to_string(i), Trajectory(pts), moving ? Label::Synthetic : Label::Human,
                   "toy", nlohmann::json::object()});
  }
  return out;
}

TrainConfig toy_config() {
  TrainConfig c;
  c.hidden_dim = 8;
  c.seq_capacity = 20;
  c.max_epochs = 50;
  c.patience = 50;
  c.batch_size = 16;
  c.adam.learning_rate = 0.01;
  c.seed = 42;
  return c;
}

}  // namespace

TEST_CASE("early stopping") {
  SUBCASE("stops patience epochs after the last improvement") {
    EarlyStopping s(40);
    int stopped = 0;
    for (int e = 1; e <= 400; ++e) {
      s.update(e, e <= 7 ? 0.1 * e : 0.3);
      if (s.should_stop(e)) {
        stopped = e;
        break;
      }
    }
    CHECK(s.best_epoch() == 7);
    CHECK(stopped == 47);
  }
  SUBCASE("ties keep the earlier epoch") {
    EarlyStopping s(5);
    CHECK(s.update(1, 0.8));
    CHECK_FALSE(s.update(2, 0.8));
    CHECK(s.best_epoch() == 1);
  }
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.check());
  c.patience = 500;
  CHECK_THROWS_AS(c.check(), Error);
  c = TrainConfig{};
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.check(), Error);
  c = TrainConfig{};
  c.adam.learning_rate = 0.0;
  CHECK_THROWS_AS(c.check(), Error);
}

TEST_CASE("training on a single class is rejected") {
  Dataset d = toy_task(1, 6);
  std::erase_if(d, [](const LabeledSample& s) { return s.label == Label::Human; });
  CHECK_THROWS_AS(train(d, d, Representation::Delta, toy_config()), Error);
}

TEST_CASE("toy separable task") {
  const Dataset train_set = toy_task(7, 40);
  const Dataset val_set = toy_task(8, 150);
  const Dataset test_set = toy_task(9, 20);
  const auto result = train(train_set, val_set, Representation::Delta, toy_config());
  CHECK(result.log.size() <= 50);
  CHECK(result.best_val_accuracy == 1.0);

  std::size_t correct = 0;
  for (const auto& s : test_set) correct += predict(result.model, s.trajectory).verdict == s.label;
  CHECK(correct == test_set.size());

  SUBCASE("training is deterministic") {
    const auto again = train(train_set, val_set, Representation::Delta, toy_config());
    CHECK(again.model.params.W == result.model.params.W);
    CHECK(again.model.params.U == result.model.params.U);
    CHECK(again.model.params.w_out == result.model.params.w_out);
    CHECK(model_to_json(again.model).dump() == model_to_json(result.model).dump());
  }

  SUBCASE("save and load round trip") {
    const auto path = std::filesystem::temp_directory_path() / "handproof_model_rt.json";
    save_model(result.model, path);
    const auto loaded = load_model(path);
    CHECK(loaded.params.W == result.model.params.W);
    CHECK(loaded.params.U == result.model.params.U);
    CHECK(loaded.params.b == result.model.params.b);
    CHECK(loaded.params.w_out == result.model.params.w_out);
    CHECK(loaded.params.b_out == result.model.params.b_out);
    CHECK(loaded.stats.mean == result.model.stats.mean);
    CHECK(loaded.stats.stddev == result.model.stats.stddev);
    for (const auto& s : test_set) {
      CHECK(predict(loaded, s.trajectory).probability == predict(result.model, s.trajectory).probability);
    }
    CHECK(model_file_id(path).size() == 16);
    std::filesystem::remove(path);
  }
}

TEST_CASE("prediction rules") {
  GruModel model;
  model.params = GruParams<double>::zeros(3, 4);
  model.stats = ChannelStats::identity(3);
  const std::vector<Point> pts{{0, 0, 0}, {1, 0, 0.01}, {2, 1, 0.02}};
  SUBCASE("one half is human") {
    const auto p = predict(model, pts);
    CHECK(p.probability == 0.5);
    CHECK(p.verdict == Label::Human);
  }
  SUBCASE("repeat calls agree") {
    Rng rng(3);
    model.params = initialize_gru<double>(3, 4, rng);
    CHECK(predict(model, pts).probability == predict(model, pts).probability);
  }
  SUBCASE("validation errors propagate") {
    const std::vector<Point> one{{0, 0, 0}};
    CHECK_THROWS_AS(predict(model, one), Error);
  }
  SUBCASE("padding length does not matter") {
    Rng rng(3);
    model.params = initialize_gru<double>(3, 4, rng);
    const auto a = prepare_features(model, Trajectory(pts));
    const auto b = prepare_features(model, Trajectory(pts));
    CHECK(a.values == b.values);
  }
}

TEST_CASE("model file errors") {
  GruModel model;
  Rng rng(5);
  model.params = initialize_gru<double>(3, 4, rng);
  model.stats = ChannelStats::identity(3);
  const nlohmann::json good = model_to_json(model);

  auto code_of = [](const nlohmann::json& j) {
    try {
      model_from_json(j);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK_NOTHROW(model_from_json(good));

  auto j = good;
  j["weights"].erase("U_r");
  CHECK(code_of(j) == ErrorCode::CorruptFile);
  j = good;
  j["format_version"] = 999;
  CHECK(code_of(j) == ErrorCode::UnsupportedVersion);
  j = good;
  j["weights"]["w_o"].push_back(1.0);
  CHECK(code_of(j) == ErrorCode::DimensionMismatch);
  j = good;
  j["representation"] = "velocity";
  CHECK(code_of(j) == ErrorCode::DimensionMismatch);
  j = good;
  j["threshold"] = 1.5;
  CHECK(code_of(j) == ErrorCode::CorruptFile);

  const auto path = std::filesystem::temp_directory_path() / "handproof_model_bad.json";
  std::ofstream(path) << "{not json";
  CHECK_THROWS_AS(load_model(path), Error);
  std::filesystem::remove(path);
}
