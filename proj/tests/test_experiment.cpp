// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "handproof/dataset_io.hpp"
#include "handproof/experiment.hpp"

using namespace handproof;

namespace {

Dataset labeled(int humans, int synthetic, const std::string& prefix = "s") {
  Dataset d;
  for (int i = 0; i < humans + synthetic; ++i) {
    const bool synth = i >= humans;
    std::vector<Point> pts;
    for (int k = 0; k < 10; ++k) {
      const double t = 0.01 * k;
      pts.push_back(synth ? Point{1.5 * k, 0.5 * k, t} : Point{0.0, 0.0, t});
    }
    d.push_back({prefix + std::to_string(i), Trajectory(pts), synth ? Label::Synthetic : Label::Human,
                 prefix, nlohmann::json::object()});
  }
  return d;
}

std::size_t count(const Dataset& d, Label l) {
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [&](const auto& s) { return s.label == l; }));
}

std::multiset<std::string> ids(const Dataset& d) {
  std::multiset<std::string> out;
  for (const auto& s : d) out.insert(s.id);
  return out;
}

TrainConfig small_config() {
  TrainConfig c;
  c.hidden_dim = 8;
  c.seq_capacity = 12;
  c.max_epochs = 40;
  c.patience = 40;
  c.batch_size = 16;
  c.adam.learning_rate = 0.01;
  return c;
}

}  // namespace

TEST_CASE("stratified split proportions") {
  const auto d = labeled(10, 10);
  const auto s = stratified_split(d, {0.7, 0.1, 0.2}, 3);
  CHECK(s.train.size() == 14);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 4);
  CHECK(count(s.train, Label::Human) == 7);
  CHECK(count(s.val, Label::Human) == 1);
  CHECK(count(s.test, Label::Human) == 2);
}

TEST_CASE("stratified split is a deterministic partition") {
  const auto d = labeled(37, 23);
  const auto a = stratified_split(d, {0.7, 0.1, 0.2}, 11);
  const auto b = stratified_split(d, {0.7, 0.1, 0.2}, 11);
  auto all = ids(a.train);
  for (const auto& x : ids(a.val)) all.insert(x);
  for (const auto& x : ids(a.test)) all.insert(x);
  CHECK(all == ids(d));
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == d.size());
  CHECK(ids(a.train) == ids(b.train));
  CHECK(a.train[0].id == b.train[0].id);
  const auto c = stratified_split(d, {0.7, 0.1, 0.2}, 12);
  bool differs = false;
  for (std::size_t i = 0; i < c.train.size(); ++i) differs |= c.train[i].id != a.train[i].id;
  CHECK(differs);

  // class ratio within one sample per split
  for (const Dataset* part : {&a.train, &a.val, &a.test}) {
    const double expected = static_cast<double>(part->size()) * 37.0 / 60.0;
    CHECK(std::abs(static_cast<double>(count(*part, Label::Human)) - expected) <= 1.0);
  }
}

TEST_CASE("split errors") {
  CHECK_THROWS_AS(stratified_split(labeled(5, 0), {0.7, 0.1, 0.2}, 1), Error);
  CHECK_THROWS_AS(stratified_split(labeled(5, 5), {0.7, 0.1, 0.3}, 1), Error);
}

TEST_CASE("fewshot and ood protocol arithmetic") {
  const auto d = labeled(500, 500);
  const auto s = stratified_split(d, {0.08, 0.02, 0.9}, 1);
  CHECK(s.train.size() == 80);
  CHECK(s.val.size() == 20);
  CHECK(s.test.size() == 900);

  const auto [picked, rest] = stratified_sample(labeled(50, 50), 0.3, 4);
  CHECK(picked.size() == 30);
  CHECK(rest.size() == 70);
  CHECK(count(picked, Label::Human) == 15);
}

TEST_CASE("class balancing") {
  const auto b = balance_classes(labeled(30, 12), 2);
  CHECK(count(b, Label::Human) == 12);
  CHECK(count(b, Label::Synthetic) == 12);
}

TEST_CASE("detect on separable toy data") {
  ExperimentConfig cfg;
  cfg.mode = Mode::Detect;
  cfg.train = small_config();
  cfg.seed = 5;
  cfg.datasets.push_back({"toy", "affine", labeled(40, 40)});
  const auto results = run_experiment(cfg);
  REQUIRE(results.size() == 1);
  const auto& r = results[0].report;
  CHECK(r.auc == 1.0);
  CHECK(r.eer == 0.0);
  CHECK(r.n_pos == 8);
  CHECK(r.n_neg == 8);
  CHECK(r.seed == 5);
  CHECK(r.source == "toy");

  const auto again = run_experiment(cfg);
  CHECK(model_to_json(again[0].model).dump() == model_to_json(results[0].model).dump());
}

TEST_CASE("ood and combined protocols") {
  ExperimentConfig cfg;
  cfg.train = small_config();
  cfg.train.max_epochs = 5;
  cfg.train.patience = 5;
  cfg.seed = 1;
  cfg.datasets.push_back({"A", "affine", labeled(50, 50, "a")});
  cfg.datasets.push_back({"B", "affine", labeled(50, 50, "b")});
  cfg.datasets.push_back({"C", "kinematic", labeled(50, 50, "c")});

  cfg.mode = Mode::Ood;
  cfg.source = "A";
  auto r = run_experiment(cfg);
  REQUIRE(r.size() == 1);
  CHECK(r[0].report.n_pos + r[0].report.n_neg == 60);
  CHECK(r[0].report.target == "B+C");

  cfg.source = "Z";
  CHECK_THROWS_AS(run_experiment(cfg), Error);

  cfg.mode = Mode::Combined;
  cfg.datasets[2].samples = labeled(50, 10, "c");
  r = run_experiment(cfg);
  CHECK(r[0].report.n_pos == 22);  // balanced pool 110 + 110, 20% test
  CHECK(r[0].report.n_neg == 22);
  CHECK(r[0].report.synthesizer == "affine+kinematic");
}

TEST_CASE("experiment file and csv report") {
  const auto dir = std::filesystem::temp_directory_path() / "handproof_exp_test";
  std::filesystem::create_directories(dir);
  write_jsonl(labeled(20, 20), dir / "toy.jsonl");
  std::ofstream(dir / "exp.json") << R"({"mode":"fewshot","fraction":0.5,"seed":3,
    "train":{"hidden_dim":4,"seq_capacity":12,"max_epochs":3,"patience":3},
    "datasets":[{"name":"toy","synthesizer":"affine","files":["toy.jsonl"]}]})";
  const auto cfg = load_experiment(dir / "exp.json");
  CHECK(cfg.mode == Mode::Fewshot);
  CHECK(cfg.train.hidden_dim == 4);
  REQUIRE(cfg.datasets.size() == 1);
  CHECK(cfg.datasets[0].samples.size() == 40);
  const auto results = run_experiment(cfg);
  CHECK(results[0].report.n_pos + results[0].report.n_neg == 20);

  std::ostringstream csv;
  write_report_csv(csv, {results[0].report});
  CHECK(csv.str().rfind(std::string(kReportColumns) + "\nfewshot,toy,toy,delta,affine,", 0) == 0);

  std::ofstream(dir / "missing.json") << R"({"datasets":[{"name":"x","files":["nope.jsonl"]}]})";
  try {
    load_experiment(dir / "missing.json");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingDataset);
  }
  std::filesystem::remove_all(dir);
}
