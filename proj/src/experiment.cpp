// SPDX-License-Identifier: Apache-2.0
#include "handproof/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <fstream>
#include <sstream>

#include "handproof/dataset_io.hpp"
#include "handproof/metrics.hpp"

namespace handproof {

namespace {

constexpr std::uint64_t kLabelStream = 0x5eed0000;

std::array<std::vector<std::size_t>, 2> shuffled_by_label(const Dataset& dataset, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) idx[as_target(dataset[i].label)].push_back(i);
  if (idx[0].empty() || idx[1].empty()) {
    throw Error(ErrorCode::SingleClass, "dataset holds one class only");
  }
  for (int label = 0; label < 2; ++label) {
    Rng rng(derive_seed(seed, kLabelStream + static_cast<std::uint64_t>(label)));
    rng.shuffle(std::span<std::size_t>(idx[label]));
  }
  return idx;
}

template <std::size_t K>
std::array<std::size_t, K> largest_remainder(std::size_t n, const std::array<double, K>& ratios) {
  std::array<std::size_t, K> counts{};
  std::array<double, K> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const double quota = static_cast<double>(n) * ratios[k];
    const double whole = std::floor(quota + 1e-9);
    counts[k] = static_cast<std::size_t>(whole);
    rem[k] = std::max(0.0, quota - whole);
    assigned += counts[k];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (rem[k] > rem[best]) best = k;
    }
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  while (assigned > n) {  // only reachable through the rounding slack above
    for (std::size_t k = K; k-- > 0;) {
      if (counts[k] > 0) {
        --counts[k];
        --assigned;
        break;
      }
    }
  }
  return counts;
}

template <std::size_t K>
std::array<Dataset, K> allocate(const Dataset& dataset, const std::array<double, K>& ratios,
                                std::uint64_t seed) {
  double total = 0.0;
  for (const double r : ratios) {
    if (!(r >= 0.0)) throw Error(ErrorCode::InvalidArgument, "split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "split ratios must sum to 1");
  const auto idx = shuffled_by_label(dataset, seed);
  std::array<Dataset, K> parts;
  for (const auto& group : idx) {
    const auto counts = largest_remainder(group.size(), ratios);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t c = 0; c < counts[k]; ++c) parts[k].push_back(dataset[group[pos++]]);
    }
  }
  return parts;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

Split stratified_split(const Dataset& dataset, std::array<double, 3> ratios, std::uint64_t seed) {
  auto parts = allocate(dataset, ratios, seed);
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

std::pair<Dataset, Dataset> stratified_sample(const Dataset& dataset, double fraction,
                                              std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fraction must lie in [0, 1]");
  }
  auto parts = allocate(dataset, std::array<double, 2>{fraction, 1.0 - fraction}, seed);
  return {std::move(parts[0]), std::move(parts[1])};
}

Dataset balance_classes(const Dataset& dataset, std::uint64_t seed) {
  const auto idx = shuffled_by_label(dataset, seed);
  const std::size_t keep = std::min(idx[0].size(), idx[1].size());
  Dataset out;
  for (const auto& group : idx) {
    for (std::size_t i = 0; i < keep; ++i) out.push_back(dataset[group[i]]);
  }
  return out;
}

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::Detect: return "detect";
    case Mode::Fewshot: return "fewshot";
    case Mode::Ood: return "ood";
    case Mode::Combined: return "combined";
  }
  return "detect";
}

Mode parse_mode(std::string_view name) {
  for (const Mode m : {Mode::Detect, Mode::Fewshot, Mode::Ood, Mode::Combined}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown mode \"" + std::string(name) + "\"");
}

MetricsReport score_model(const GruModel& model, const Dataset& test, bool weighted) {
  const auto probs = predict_probabilities(model, test);
  std::vector<int> labels, preds;
  for (std::size_t i = 0; i < test.size(); ++i) {
    labels.push_back(as_target(test[i].label));
    preds.push_back(probs[i] > model.threshold ? 1 : 0);
  }
  MetricsReport r;
  r.representation = model.representation;
  r.auc = roc_auc(probs, labels);
  r.eer = eer(probs, labels);
  const auto c = confusion(preds, labels);
  const auto scores = balanced_accuracy_fscore(c);
  r.balanced_accuracy = scores.balanced_accuracy;
  r.f_score = weighted ? weighted_fscore(c) : scores.f_score;
  r.n_pos = c.tp + c.fn;
  r.n_neg = c.tn + c.fp;
  return r;
}

ExperimentResult train_and_score(const Split& split, Representation repr, const TrainConfig& train_cfg,
                                 bool weighted, const EpochCallback& on_epoch) {
  ExperimentResult out;
  out.model = train(split.train, split.val, repr, train_cfg, on_epoch).model;
  out.report = score_model(out.model, split.test, weighted);
  out.report.seed = train_cfg.seed;
  return out;
}

std::vector<ExperimentResult> run_experiment(const ExperimentConfig& config, const EpochCallback& on_epoch) {
  if (config.datasets.empty()) throw Error(ErrorCode::MissingDataset, "experiment lists no datasets");
  TrainConfig train_cfg = config.train;
  train_cfg.seed = config.seed;
  std::vector<ExperimentResult> results;

  auto finish = [&](ExperimentResult r, const std::string& source, const std::string& target,
                    const std::string& synthesizer) {
    r.report.mode = config.mode;
    r.report.source = source;
    r.report.target = target;
    r.report.synthesizer = synthesizer;
    r.report.seed = config.seed;
    results.push_back(std::move(r));
  };

  switch (config.mode) {
    case Mode::Detect:
    case Mode::Fewshot: {
      const std::array<double, 3> ratios =
          config.mode == Mode::Detect
              ? std::array<double, 3>{0.7, 0.1, 0.2}
              : std::array<double, 3>{0.8 * config.fraction, 0.2 * config.fraction, 1.0 - config.fraction};
      for (const auto& d : config.datasets) {
        const Split split = stratified_split(d.samples, ratios, config.seed);
        finish(train_and_score(split, config.representation, train_cfg, false, on_epoch), d.name, d.name,
               d.synthesizer);
      }
      break;
    }
    case Mode::Ood: {
      const auto src = std::find_if(config.datasets.begin(), config.datasets.end(),
                                    [&](const NamedDataset& d) { return d.name == config.source; });
      if (src == config.datasets.end()) {
        throw Error(ErrorCode::MissingDataset, "ood source \"" + config.source + "\" is not listed");
      }
      if (config.datasets.size() < 2) throw Error(ErrorCode::MissingDataset, "ood needs a second dataset");
      Split split = stratified_split(src->samples, {0.7, 0.1, 0.2}, config.seed);
      split.test.clear();
      std::vector<std::string> targets;
      for (std::size_t i = 0; i < config.datasets.size(); ++i) {
        const auto& d = config.datasets[i];
        if (d.name == config.source) continue;
        auto part = stratified_sample(d.samples, 0.3, derive_seed(config.seed, i + 1)).first;
        split.test.insert(split.test.end(), part.begin(), part.end());
        targets.push_back(d.name);
      }
      finish(train_and_score(split, config.representation, train_cfg, false, on_epoch), src->name,
             join(targets, '+'), src->synthesizer);
      break;
    }
    case Mode::Combined: {
      Dataset pool;
      std::vector<std::string> names, synths;
      for (const auto& d : config.datasets) {
        pool.insert(pool.end(), d.samples.begin(), d.samples.end());
        names.push_back(d.name);
        if (std::find(synths.begin(), synths.end(), d.synthesizer) == synths.end()) {
          synths.push_back(d.synthesizer);
        }
      }
      if (config.balance) pool = balance_classes(pool, config.seed);
      const Split split = stratified_split(pool, {0.7, 0.1, 0.2}, config.seed);
      finish(train_and_score(split, config.representation, train_cfg, !config.balance, on_epoch),
             join(names, '+'), join(names, '+'), join(synths, '+'));
      break;
    }
  }
  return results;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    c.mode = parse_mode(j.value("mode", std::string("detect")));
    c.representation = parse_representation(j.value("representation", std::string("delta")));
    c.seed = j.value("seed", std::uint64_t{0});
    c.fraction = j.value("fraction", c.fraction);
    c.source = j.value("source", std::string());
    c.balance = j.value("balance", c.balance);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (!(c.fraction > 0.0 && c.fraction < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "fraction must lie in (0, 1)");
    }
    for (const auto& d : j.at("datasets")) {
      NamedDataset nd;
      nd.name = d.at("name").get<std::string>();
      nd.synthesizer = d.value("synthesizer", std::string());
      for (const auto& f : d.at("files")) {
        std::filesystem::path p = f.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        if (!std::filesystem::exists(p)) {
          throw Error(ErrorCode::MissingDataset, "dataset file " + p.string() + " does not exist");
        }
        auto part = read_jsonl(p);
        nd.samples.insert(nd.samples.end(), std::make_move_iterator(part.begin()),
                          std::make_move_iterator(part.end()));
      }
      c.datasets.push_back(std::move(nd));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return experiment_from_json(j, path.parent_path());
}

void write_report_csv(std::ostream& out, const std::vector<MetricsReport>& reports) {
  out << kReportColumns << '\n';
  std::ostringstream line;
  line.precision(17);
  for (const auto& r : reports) {
    line.str("");
    line << to_string(r.mode) << ',' << r.source << ',' << r.target << ',' << to_string(r.representation)
         << ',' << r.synthesizer << ',' << r.auc << ',' << r.eer << ',' << r.balanced_accuracy << ','
         << r.f_score << ',' << r.n_pos << ',' << r.n_neg << ',' << r.seed;
    out << line.str() << '\n';
  }
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"mode", std::string(to_string(r.mode))},
          {"source", r.source},
          {"target", r.target},
          {"representation", std::string(to_string(r.representation))},
          {"synthesizer", r.synthesizer},
          {"auc", r.auc},
          {"eer", r.eer},
          {"bal_acc", r.balanced_accuracy},
          {"f1", r.f_score},
          {"n_pos", r.n_pos},
          {"n_neg", r.n_neg},
          {"seed", r.seed}};
}

}  // namespace handproof
