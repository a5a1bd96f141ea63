// SPDX-License-Identifier: Apache-2.0
#include "handproof/service.hpp"

#include <csignal>
#include <iostream>
#include <thread>

#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>
#include <sys/socket.h>

#include "handproof/dataset_io.hpp"

namespace handproof {

namespace {

ServiceResponse error_response(int status, std::string_view code, const std::string& message) {
  return {status, {{"error", std::string(code)}, {"message", message}}};
}

}  // namespace

nlohmann::json prediction_json(const Prediction& p, const std::string& model_id, Representation repr) {
  return {{"probability", p.probability},
          {"verdict", std::string(to_string(p.verdict))},
          {"model_id", model_id},
          {"representation", std::string(to_string(repr))}};
}

void VerifyService::load(const std::filesystem::path& model_path) {
  auto loaded = std::make_shared<Loaded>(Loaded{load_model(model_path), model_file_id(model_path)});
  std::lock_guard lock(mutex_);
  loaded_ = std::move(loaded);
  path_ = model_path;
}

void VerifyService::set_model(GruModel model, std::string model_id) {
  model.check();
  auto loaded = std::make_shared<Loaded>(Loaded{std::move(model), std::move(model_id)});
  std::lock_guard lock(mutex_);
  loaded_ = std::move(loaded);
}

bool VerifyService::reload() {
  std::optional<std::filesystem::path> path;
  {
    std::lock_guard lock(mutex_);
    path = path_;
  }
  if (!path) return false;
  load(*path);
  return true;
}

std::shared_ptr<const VerifyService::Loaded> VerifyService::snapshot() const {
  std::lock_guard lock(mutex_);
  return loaded_;
}

std::optional<std::string> VerifyService::model_id() const {
  const auto s = snapshot();
  if (!s) return std::nullopt;
  return s->id;
}

ServiceResponse VerifyService::verify(std::string_view body) const {
  const auto current = snapshot();
  if (!current) return error_response(503, "no_model", "no model is loaded");
  nlohmann::json request;
  try {
    request = nlohmann::json::parse(body);
  } catch (const nlohmann::json::out_of_range& e) {
    // number literal beyond the double range
    return error_response(400, error_code_name(ErrorCode::NonFiniteValue), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "bad_request", std::string("body is not JSON: ") + e.what());
  }
  if (!request.is_object() || !request.contains("points")) {
    return error_response(400, "bad_request", "body must be an object with \"points\"");
  }
  try {
    const auto points = points_from_json(request.at("points"));
    const Prediction p = predict(current->model, points);
    return {200, prediction_json(p, current->id, current->model.representation)};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) return error_response(400, "bad_request", e.what());
    return error_response(400, error_code_name(e.code()), e.what());
  }
}

ServiceResponse VerifyService::health() const {
  const auto current = snapshot();
  if (!current) return {503, {{"status", "no_model"}, {"model_id", nullptr}}};
  return {200, {{"status", "ok"}, {"model_id", current->id}}};
}

ServiceResponse VerifyService::model_info() const {
  const auto current = snapshot();
  if (!current) return error_response(503, "no_model", "no model is loaded");
  auto meta = model_metadata(current->model);
  meta["model_id"] = current->id;
  return {200, std::move(meta)};
}

ServerOptions parse_address(std::string_view address) {
  ServerOptions o;
  const auto colon = address.rfind(':');
  std::string_view port = address;
  if (colon != std::string_view::npos) {
    if (colon > 0) o.host = std::string(address.substr(0, colon));
    port = address.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const int value = std::stoi(std::string(port), &used);
    if (used != port.size() || value < 0 || value > 65535) throw std::invalid_argument("port");
    o.port = value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad address \"" + std::string(address) + "\"");
  }
  return o;
}

struct HttpServer::Impl {
  VerifyService& service;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;

  Impl(VerifyService& s, ServerOptions o) : service(s), options(std::move(o)) {}

  void send(httplib::Response& res, const ServiceResponse& r) const {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }

  void routes() {
    // SO_REUSEADDR without SO_REUSEPORT: a second server on the port must fail.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server.set_payload_max_length(16 * 1024 * 1024);
    if (!options.cors_origin.empty()) {
      server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                  {"Access-Control-Allow-Headers", "Content-Type"},
                                  {"Vary", "Origin"}});
      server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
    server.Post("/verify", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, service.verify(req.body));
    });
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) { send(res, service.health()); });
    server.Get("/model", [this](const httplib::Request&, httplib::Response& res) {
      send(res, service.model_info());
    });
  }
};

HttpServer::HttpServer(VerifyService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->options.port == 0) {
    port_ = impl_->server.bind_to_any_port(impl_->options.host);
    if (port_ < 0) port_ = 0;
  } else if (impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
    port_ = impl_->options.port;
  }
  if (port_ <= 0) {
    throw Error(ErrorCode::IoError, "cannot bind " + impl_->options.host + ":" +
                                        std::to_string(impl_->options.port));
  }
  return port_;
}

void HttpServer::start() {
  if (port_ == 0) bind();
  if (impl_->thread.joinable()) return;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_ || !impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

int serve_until_signal(VerifyService& service, const ServerOptions& options) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGHUP);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  HttpServer server(service, options);
  const int port = server.bind();
  server.start();
  std::cerr << "listening on " << options.host << ":" << port << std::endl;
  for (;;) {
    int sig = 0;
    if (sigwait(&signals, &sig) != 0) continue;
    if (sig == SIGHUP) {
      try {
        if (service.reload()) std::cerr << "model reloaded: " << service.model_id().value_or("") << std::endl;
      } catch (const Error& e) {
        std::cerr << "reload failed, keeping the current model: " << e.what() << std::endl;
      }
      continue;
    }
    break;
  }
  server.stop();
  std::cerr << "stopped" << std::endl;
  return 0;
}

}  // namespace handproof
