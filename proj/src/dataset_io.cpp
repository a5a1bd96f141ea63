// SPDX-License-Identifier: Apache-2.0
#include "handproof/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "handproof/error.hpp"

namespace handproof {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Label label) noexcept {
  return label == Label::Human ? "human" : "synthetic";
}

Label parse_label(std::string_view name) {
  if (name == "human") return Label::Human;
  if (name == "synthetic") return Label::Synthetic;
  throw Error(ErrorCode::ParseError, "unknown label '" + std::string(name) + "'");
}

json points_to_json(const Trajectory& trajectory) {
  json out = json::array();
  for (const Point& p : trajectory.points()) out.push_back({p.x, p.y, p.t});
  return out;
}

std::vector<Point> points_from_json(const json& points) {
  if (!points.is_array()) {
    throw Error(ErrorCode::ParseError, "'points' must be an array");
  }
  std::vector<Point> out;
  out.reserve(points.size());
  for (const json& p : points) {
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() ||
        !p[1].is_number() || !p[2].is_number()) {
      throw Error(ErrorCode::ParseError, "each point must be [x, y, t]");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  return out;
}

json sample_to_json(const LabeledSample& sample) {
  return {{"id", sample.id},
          {"label", to_string(sample.label)},
          {"source", sample.source},
          {"points", points_to_json(sample.trajectory)}};
}

LabeledSample sample_from_json(const json& record) {
  if (!record.is_object()) {
    throw Error(ErrorCode::ParseError, "record is not a JSON object");
  }
  for (const char* key : {"id", "label", "source", "points"}) {
    if (!record.contains(key)) {
      throw Error(ErrorCode::ParseError, std::string("missing key '") + key + "'");
    }
  }
  if (!record["id"].is_string() || !record["label"].is_string() ||
      !record["source"].is_string()) {
    throw Error(ErrorCode::ParseError, "id, label and source must be strings");
  }
  const auto source = record["source"].get<std::string>();
  if (source.empty()) throw Error(ErrorCode::ParseError, "empty source tag");
  const auto points = points_from_json(record["points"]);

  LabeledSample sample{record["id"].get<std::string>(),
                       validate(points, /*repair=*/false),
                       parse_label(record["label"].get<std::string>()), source};
  for (const auto& [key, value] : record.items()) {
    if (key != "id" && key != "label" && key != "source" && key != "points") {
      sample.extra[key] = value;
    }
  }
  return sample;
}

Dataset read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" +
                                             std::to_string(line_no) + ": " +
                                             e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" +
                                             std::to_string(line_no) + ": " +
                                             e.what());
    }
  }
  return out;
}

std::size_t write_jsonl(const Dataset& samples, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  std::size_t dropped = 0;
  for (const LabeledSample& sample : samples) {
    dropped += sample.extra.size();
    out << sample_to_json(sample).dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
  return dropped;
}

namespace {

std::vector<Point> parse_gesture_file(const fs::path& file) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_xml(file.string(), tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::MalformedXml, file.string() + ": " + e.what());
  }
  const auto gesture = tree.get_child_optional("Gesture");
  if (!gesture) {
    throw Error(ErrorCode::MalformedXml, file.string() + ": no <Gesture> element");
  }
  std::vector<Point> points;
  try {
    for (const auto& [name, node] : *gesture) {
      if (name != "Point") continue;
      points.push_back({node.get<double>("<xmlattr>.X"),
                        node.get<double>("<xmlattr>.Y"),
                        node.get<double>("<xmlattr>.T")});
    }
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::MalformedXml, file.string() + ": " + e.what());
  }
  if (!points.empty()) {
    const double origin = points.front().t;
    for (Point& p : points) p.t = (p.t - origin) / 1000.0;
  }
  return points;
}

}  // namespace

GdsLoadResult load_gds_xml(const fs::path& directory) {
  if (!fs::is_directory(directory)) {
    throw Error(ErrorCode::NotFound, "no such directory: " + directory.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  GdsLoadResult result;
  result.files = files.size();
  for (const fs::path& file : files) {
    const auto points = parse_gesture_file(file);
    try {
      result.samples.push_back(
          {fs::relative(file, directory).generic_string(),
           validate(points, /*repair=*/true), Label::Human, "$1-GDS"});
    } catch (const Error&) {
      ++result.skipped;
    }
  }
  return result;
}

namespace {

Percentiles percentiles(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.05), at(0.50), at(0.95)};
}

}  // namespace

DatasetSummary dataset_stats(const Dataset& dataset) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "dataset is empty");
  DatasetSummary summary;
  summary.total = dataset.size();
  std::vector<double> lengths, durations;
  std::size_t exposed = 0;
  for (const LabeledSample& s : dataset) {
    ++summary.per_source[s.source];
    ++summary.per_label[std::string(to_string(s.label))];
    lengths.push_back(static_cast<double>(s.trajectory.size()));
    durations.push_back(s.trajectory.duration());
    if (static_cast<Eigen::Index>(s.trajectory.size()) - 1 > kSequenceCapacity) {
      ++exposed;
    }
  }
  summary.length = percentiles(std::move(lengths));
  summary.duration = percentiles(std::move(durations));
  summary.truncation_exposure =
      static_cast<double>(exposed) / static_cast<double>(dataset.size());
  return summary;
}

json to_json(const DatasetSummary& summary) {
  auto pct = [](const Percentiles& p) {
    return json{{"p05", p.p05}, {"p50", p.p50}, {"p95", p.p95}};
  };
  return {{"total", summary.total},
          {"per_source", summary.per_source},
          {"per_label", summary.per_label},
          {"length", pct(summary.length)},
          {"duration", pct(summary.duration)},
          {"truncation_exposure", summary.truncation_exposure}};
}

}  // namespace handproof
