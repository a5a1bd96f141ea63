// SPDX-License-Identifier: Apache-2.0
// handproof: synthesis, extraction, training, evaluation and serving.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "handproof/affine.hpp"
#include "handproof/dataset_io.hpp"
#include "handproof/experiment.hpp"
#include "handproof/lognormal.hpp"
#include "handproof/model.hpp"
#include "handproof/service.hpp"

namespace hp = handproof;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw hp::Error(hp::ErrorCode::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw hp::Error(hp::ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

hp::PerturbationRanges ranges_from_json(const nlohmann::json& j) {
  hp::PerturbationRanges r;
  r.duration = j.value("duration", r.duration);
  r.onset = j.value("onset", r.onset);
  r.amplitude = j.value("amplitude", r.amplitude);
  r.angle = j.value("angle", r.angle);
  return r;
}

struct SynthArgs {
  std::string method;
  std::string in, out, params, plan;
  std::uint64_t seed = 0;
  double rate = 100.0;
};

int run_synth(const SynthArgs& a) {
  if (a.method == "lognormal") {
    if (a.plan.empty()) throw hp::Error(hp::ErrorCode::InvalidArgument, "--plan is required");
    const auto plan = hp::plan_from_json(read_json_file(a.plan));
    const double rate = plan.sample_rate > 0.0 ? plan.sample_rate : a.rate;
    hp::LabeledSample s{fs::path(a.plan).stem().string() + "/lognormal",
                        hp::synthesize_trajectory(plan, rate), hp::Label::Synthetic, "lognormal",
                        nlohmann::json::object()};
    hp::write_jsonl({s}, a.out);
    return 0;
  }
  if (a.in.empty()) throw hp::Error(hp::ErrorCode::InvalidArgument, "--in is required");
  const nlohmann::json params = a.params.empty() ? nlohmann::json::object() : read_json_file(a.params);
  const auto input = hp::read_jsonl(a.in);
  hp::Dataset out;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    hp::Rng rng(hp::derive_seed(a.seed, i));
    try {
      if (a.method == "kinematic") {
        out.push_back(hp::kinematic_synthesize(input[i], rng, ranges_from_json(params)));
      } else if (a.method == "affine") {
        out.push_back(hp::affine_synthesize(input[i], hp::affine_params_from_json(params), rng));
      } else if (a.method == "reconstruct") {
        out.push_back({input[i].id + "/reconstruct", hp::reconstruct(input[i].trajectory),
                       hp::Label::Synthetic, "reconstruct", nlohmann::json::object()});
      } else {
        throw hp::Error(hp::ErrorCode::InvalidArgument, "unknown method " + a.method);
      }
    } catch (const hp::Error& e) {
      if (e.code() != hp::ErrorCode::ExtractionFailed) throw;
      ++failed;
      std::cerr << input[i].id << ": " << e.what() << "\n";
    }
  }
  hp::write_jsonl(out, a.out);
  std::cerr << "wrote " << out.size() << " samples";
  if (failed > 0) std::cerr << ", " << failed << " skipped";
  std::cerr << "\n";
  return 0;
}

int run_extract(const std::string& in, const std::string& out_path) {
  const auto input = hp::read_jsonl(in);
  std::ofstream out(out_path);
  if (!out) throw hp::Error(hp::ErrorCode::IoError, "cannot write " + out_path);
  for (const auto& s : input) {
    try {
      const auto e = hp::extract_plan(s.trajectory);
      out << nlohmann::json{{"id", s.id},
                            {"snr_db", e.snr_db},
                            {"nblog_rate", hp::nblog_rate(e.plan, s.trajectory.duration())},
                            {"plan", hp::to_json(e.plan)}}
                 .dump()
          << "\n";
    } catch (const hp::Error& e) {
      if (e.code() != hp::ErrorCode::ExtractionFailed) throw;
      std::cerr << s.id << ": " << e.what() << "\n";
    }
  }
  return 0;
}

struct TrainArgs {
  std::string data, val, repr = "delta", out, config, log;
  std::uint64_t seed = 0;
  bool masked = false;
  std::optional<int> epochs;
};

int run_train(const TrainArgs& a) {
  hp::TrainConfig config;
  if (!a.config.empty()) config = hp::train_config_from_json(read_json_file(a.config));
  config.seed = a.seed;
  if (a.masked) config.masked_readout = true;
  if (a.epochs) {
    config.max_epochs = *a.epochs;
    config.patience = std::min(config.patience, config.max_epochs);
  }
  config.check();
  const auto train_set = hp::read_jsonl(a.data);
  const auto val_set = hp::read_jsonl(a.val);
  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log);
    log << "epoch,loss,val_accuracy\n";
  }
  const auto result = hp::train(train_set, val_set, hp::parse_representation(a.repr), config,
                                [&](const hp::EpochRecord& r) {
                                  std::cerr << "epoch " << r.epoch << " loss " << r.loss << " val_acc "
                                            << r.val_accuracy << "\n";
                                  if (log) log << r.epoch << ',' << r.loss << ',' << r.val_accuracy << '\n';
                                });
  hp::save_model(result.model, a.out);
  std::cerr << "best epoch " << result.best_epoch << " val_acc " << result.best_val_accuracy << ", model "
            << hp::model_file_id(a.out) << "\n";
  return 0;
}

int run_eval(const std::string& mode, const std::string& config_path, const std::string& out_path) {
  auto config = hp::load_experiment(config_path);
  if (!mode.empty()) config.mode = hp::parse_mode(mode);
  const auto results = hp::run_experiment(config);
  std::vector<hp::MetricsReport> reports;
  for (const auto& r : results) reports.push_back(r.report);
  if (out_path.empty() || out_path == "-") {
    hp::write_report_csv(std::cout, reports);
  } else {
    std::ofstream out(out_path);
    if (!out) throw hp::Error(hp::ErrorCode::IoError, "cannot write " + out_path);
    hp::write_report_csv(out, reports);
  }
  return 0;
}

int run_stats(const std::vector<std::string>& files) {
  hp::Dataset all;
  for (const auto& f : files) {
    auto d = hp::read_jsonl(f);
    all.insert(all.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
  }
  std::cout << hp::to_json(hp::dataset_stats(all)).dump(2) << "\n";
  return 0;
}

std::string model_path_or_env(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("HANDPROOF_MODEL"); env != nullptr && *env != '\0') return env;
  throw hp::Error(hp::ErrorCode::InvalidArgument, "no model: pass --model or set HANDPROOF_MODEL");
}

int run_predict(const std::string& model_flag, const std::string& in, const std::string& points) {
  const std::string path = model_path_or_env(model_flag);
  const auto model = hp::load_model(path);
  const std::string id = hp::model_file_id(path);
  auto emit = [&](const std::string& sample_id, std::span<const hp::Point> pts) {
    auto j = hp::prediction_json(hp::predict(model, pts), id, model.representation);
    if (!sample_id.empty()) j["id"] = sample_id;
    std::cout << j.dump() << "\n";
  };
  if (!points.empty()) {
    const auto body = read_json_file(points);
    if (!body.is_object() || !body.contains("points")) {
      throw hp::Error(hp::ErrorCode::ParseError, points + ": expected {\"points\": [...]}");
    }
    emit("", hp::points_from_json(body.at("points")));
    return 0;
  }
  for (const auto& s : hp::read_jsonl(in)) emit(s.id, s.trajectory.points());
  return 0;
}

int run_import_gds(const std::string& dir, const std::string& out) {
  const auto r = hp::load_gds_xml(dir);
  hp::write_jsonl(r.samples, out);
  std::cerr << "files " << r.files << ", samples " << r.samples.size() << ", skipped " << r.skipped << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human versus synthetic handwriting toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic counterparts");
  synth_cmd->add_option("--method", synth.method, "kinematic | affine | reconstruct | lognormal")
      ->required()
      ->check(CLI::IsMember({"kinematic", "affine", "reconstruct", "lognormal"}));
  synth_cmd->add_option("--in", synth.in, "Input JSONL dataset");
  synth_cmd->add_option("--out", synth.out, "Output JSONL")->required();
  synth_cmd->add_option("--params", synth.params, "Method parameters (JSON)");
  synth_cmd->add_option("--plan", synth.plan, "Action plan (JSON) for --method lognormal");
  synth_cmd->add_option("--rate", synth.rate, "Sample rate when the plan has none");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");

  std::string extract_in, extract_out;
  auto* extract_cmd = app.add_subcommand("extract", "Fit lognormal action plans");
  extract_cmd->add_option("--in", extract_in, "Input JSONL dataset")->required();
  extract_cmd->add_option("--out", extract_out, "Output JSONL of plans")->required();

  TrainArgs train;
  int epochs = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a detector");
  train_cmd->add_option("--data", train.data, "Training JSONL")->required();
  train_cmd->add_option("--val", train.val, "Validation JSONL")->required();
  train_cmd->add_option("--repr", train.repr, "delta | velocity")->check(CLI::IsMember({"delta", "velocity"}));
  train_cmd->add_option("--seed", train.seed, "Random seed");
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--config", train.config, "Training settings (JSON)");
  train_cmd->add_option("--log", train.log, "Per-epoch CSV log");
  train_cmd->add_option("--epochs", epochs, "Override max_epochs");
  train_cmd->add_flag("--masked", train.masked, "Read the state at the last real row");

  std::string eval_mode, eval_config, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Run an experiment protocol");
  eval_cmd->add_option("--mode", eval_mode, "detect | fewshot | ood | combined")
      ->check(CLI::IsMember({"detect", "fewshot", "ood", "combined"}));
  eval_cmd->add_option("--config", eval_config, "Experiment file (JSON)")->required();
  eval_cmd->add_option("--out", eval_out, "Report CSV (default stdout)");

  std::vector<std::string> stats_files;
  auto* stats_cmd = app.add_subcommand("stats", "Summarize datasets");
  stats_cmd->add_option("--data,files", stats_files, "JSONL files")->required();

  std::string serve_model, serve_addr = "127.0.0.1:8080", cors;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP verification service");
  serve_cmd->add_option("--model", serve_model, "Model file (default $HANDPROOF_MODEL)");
  serve_cmd->add_option("--addr", serve_addr, "host:port");
  serve_cmd->add_option("--cors-origin", cors, "Allowed browser origin");

  std::string predict_model, predict_in, predict_points;
  auto* predict_cmd = app.add_subcommand("predict", "Score trajectories");
  predict_cmd->add_option("--model", predict_model, "Model file (default $HANDPROOF_MODEL)");
  auto* in_opt = predict_cmd->add_option("--in", predict_in, "JSONL dataset");
  auto* pts_opt = predict_cmd->add_option("--points", predict_points, "JSON file {\"points\": [[x, y, t], ...]}");
  in_opt->excludes(pts_opt);

  std::string gds_dir, gds_out;
  auto* gds_cmd = app.add_subcommand("import-gds", "Convert $1 gesture XML logs to JSONL");
  gds_cmd->add_option("--dir", gds_dir, "Corpus directory")->required();
  gds_cmd->add_option("--out", gds_out, "Output JSONL")->required();

  CLI11_PARSE(app, argc, argv);
  if (train_cmd->count("--epochs") > 0) train.epochs = epochs;
  if (*predict_cmd && in_opt->count() + pts_opt->count() == 0) {
    std::cerr << "predict needs --in or --points\n";
    return 106;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*extract_cmd) return run_extract(extract_in, extract_out);
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_eval(eval_mode, eval_config, eval_out);
    if (*stats_cmd) return run_stats(stats_files);
    if (*predict_cmd) return run_predict(predict_model, predict_in, predict_points);
    if (*gds_cmd) return run_import_gds(gds_dir, gds_out);
    if (*serve_cmd) {
      hp::VerifyService service(model_path_or_env(serve_model));
      auto options = hp::parse_address(serve_addr);
      options.cors_origin = cors;
      return hp::serve_until_signal(service, options);
    }
  } catch (const hp::Error& e) {
    std::cerr << "error (" << hp::error_code_name(e.code()) << "): " << e.what() << "\n";
    return 2;
  }
  return 0;
}
