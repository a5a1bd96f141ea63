// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "handproof/dataset_io.hpp"
#include "handproof/error.hpp"

using namespace handproof;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

LabeledSample sample_with(std::size_t points, const std::string& source, Label label) {
  std::vector<Point> pts;
  for (std::size_t k = 0; k < points; ++k) pts.push_back({double(k), 0.0, 0.01 * double(k)});
  return {source + std::to_string(points), Trajectory(pts), label, source, nlohmann::json::object()};
}

}  // namespace

TEST_CASE("jsonl round trip on random samples") {
  TempDir dir("handproof_io_rt");
  Rng rng(31);
  Dataset d;
  for (int i = 0; i < 40; ++i) {
    auto s = testing::pseudo_human(rng, "h" + std::to_string(i));
    if (i % 3 == 0) s.label = Label::Synthetic;
    d.push_back(std::move(s));
  }
  CHECK(write_jsonl(d, dir.path / "d.jsonl") == 0);
  const auto back = read_jsonl(dir.path / "d.jsonl");
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back[i].id == d[i].id);
    CHECK(back[i].label == d[i].label);
    CHECK(back[i].source == d[i].source);
    CHECK(back[i].trajectory == d[i].trajectory);
  }
}

TEST_CASE("jsonl unknown keys are kept on read and counted on write") {
  TempDir dir("handproof_io_extra");
  std::ofstream(dir.path / "x.jsonl")
      << R"({"id":"a","label":"human","source":"s","points":[[0,0,0],[1,1,0.1]],"writer":7})" << "\n";
  const auto d = read_jsonl(dir.path / "x.jsonl");
  REQUIRE(d.size() == 1);
  CHECK(d[0].extra.at("writer") == 7);
  CHECK(write_jsonl(d, dir.path / "y.jsonl") == 1);
}

TEST_CASE("jsonl errors") {
  TempDir dir("handproof_io_err");
  std::ofstream(dir.path / "bad.jsonl")
      << R"({"id":"a","label":"human","source":"s","points":[[0,0,0],[1,1,0.1]]})" << "\n"
      << R"({"id":"b","label":"robot","source":"s","points":[[0,0,0],[1,1,0.1]]})" << "\n";
  try {
    read_jsonl(dir.path / "bad.jsonl");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  std::ofstream(dir.path / "empty.jsonl").close();
  CHECK(read_jsonl(dir.path / "empty.jsonl").empty());
  CHECK(code_of([&] { read_jsonl(dir.path / "absent.jsonl"); }) == ErrorCode::IoError);
}

TEST_CASE("gesture xml loader") {
  TempDir dir("handproof_io_gds");
  fs::create_directories(dir.path / "s01");
  std::ofstream(dir.path / "s01" / "arrow01.xml")
      << R"(<?xml version="1.0"?><Gesture Name="arrow01" Number="1">)"
      << R"(<Point X="0" Y="0" T="0" /><Point X="10" Y="0" T="16" /></Gesture>)";
  std::ofstream(dir.path / "s01" / "dot01.xml")
      << R"(<?xml version="1.0"?><Gesture Name="dot01"><Point X="3" Y="4" T="5" /></Gesture>)";
  std::ofstream(dir.path / "notes.txt") << "ignored";

  const auto r = load_gds_xml(dir.path);
  CHECK(r.files == 2);
  CHECK(r.skipped == 1);
  REQUIRE(r.samples.size() == 1);
  const auto& s = r.samples[0];
  CHECK(s.label == Label::Human);
  CHECK(s.source == "$1-GDS");
  REQUIRE(s.trajectory.size() == 2);
  CHECK(s.trajectory.points()[0] == Point{0, 0, 0.0});
  CHECK(s.trajectory.points()[1] == Point{10, 0, 0.016});

  std::ofstream(dir.path / "broken.xml") << "<Gesture><Point X=";
  CHECK(code_of([&] { load_gds_xml(dir.path); }) == ErrorCode::MalformedXml);
  CHECK(code_of([&] { load_gds_xml(dir.path / "nowhere"); }) == ErrorCode::NotFound);
}

TEST_CASE("dataset statistics") {
  SUBCASE("label counts") {
    const Dataset d{sample_with(10, "a", Label::Human), sample_with(12, "b", Label::Synthetic)};
    const auto s = dataset_stats(d);
    CHECK(s.total == 2);
    CHECK(s.per_label.at("human") == 1);
    CHECK(s.per_label.at("synthetic") == 1);
    CHECK(s.per_source.at("a") == 1);
    CHECK(s.truncation_exposure == 0.0);
  }
  SUBCASE("length percentiles") {
    const Dataset d(5, sample_with(10, "a", Label::Human));
    CHECK(dataset_stats(d).length.p50 == 10.0);
    CHECK(dataset_stats(d).duration.p50 == doctest::Approx(0.09));
  }
  SUBCASE("truncation exposure") {
    const Dataset d{sample_with(600, "a", Label::Human), sample_with(10, "a", Label::Human)};
    CHECK(dataset_stats(d).truncation_exposure == 0.5);
    CHECK(to_json(dataset_stats(d)).at("total") == 2);
  }
  CHECK(code_of([] { dataset_stats({}); }) == ErrorCode::EmptyDataset);
}
