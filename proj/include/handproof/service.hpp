// SPDX-License-Identifier: Apache-2.0
//
// Verification service: request handling over a shared, read-only model and
// the HTTP front end.
#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "handproof/model.hpp"

namespace handproof {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// JSON body of a successful verification, shared with the CLI.
nlohmann::json prediction_json(const Prediction& p, const std::string& model_id, Representation repr);

class VerifyService {
 public:
  VerifyService() = default;
  explicit VerifyService(const std::filesystem::path& model_path) { load(model_path); }

  /// Loads a model file and swaps it in. Requests already running keep the
  /// model they started with.
  void load(const std::filesystem::path& model_path);
  void set_model(GruModel model, std::string model_id);
  /// Reloads the last loaded file; false when there is none.
  bool reload();
  bool has_model() const { return snapshot() != nullptr; }
  std::optional<std::string> model_id() const;

  /// POST /verify with {"points": [[x, y, t], ...]}.
  ServiceResponse verify(std::string_view body) const;
  /// GET /health
  ServiceResponse health() const;
  /// GET /model: metadata without weights.
  ServiceResponse model_info() const;

 private:
  struct Loaded {
    GruModel model;
    std::string id;
  };
  std::shared_ptr<const Loaded> snapshot() const;

  mutable std::mutex mutex_;
  std::shared_ptr<const Loaded> loaded_;
  std::optional<std::filesystem::path> path_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string cors_origin;
};

/// Parses "host:port" (or ":port", or a bare port).
ServerOptions parse_address(std::string_view address);

class HttpServer {
 public:
  HttpServer(VerifyService& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; throws IoError when the address is unavailable.
  /// Returns the bound port.
  int bind();
  /// Serves on a background thread; returns once requests are accepted.
  /// Binds first if bind() was not called.
  void start();
  /// Stops accepting, finishes running requests and joins the thread.
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// Serves until SIGINT or SIGTERM; SIGHUP reloads the model file.
/// Blocks those signals in the calling thread, so call it before starting
/// other threads.
int serve_until_signal(VerifyService& service, const ServerOptions& options);

}  // namespace handproof
