// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP generation service.
//
//   POST /generate    SceneRequest JSON -> image/png
//                     headers X-Generation-Latency-Ms, X-Generation-Seed
//   GET  /palette     the 8 palette colors
//   GET  /model-info  model config, training step, parameter counts
//   GET  /health      {"status": "ok", "model_loaded": bool}
//
// Errors are JSON: 400 malformed JSON, 422 {"errors": [{field, message}]},
// 503 when no model is loaded or the work queue is full.
#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sgsynth/model.hpp"

namespace httplib {
class Server;
}

namespace sgsynth {

/// FIFO of jobs run one at a time on a dedicated thread. submit() refuses work
/// when `capacity` jobs are already waiting.
class WorkQueue {
 public:
  explicit WorkQueue(std::size_t capacity);
  ~WorkQueue();
  WorkQueue(const WorkQueue&) = delete;
  WorkQueue& operator=(const WorkQueue&) = delete;

  /// nullopt when the queue is full or shut down.
  template <class F>
  auto submit(F&& fn) -> std::optional<std::future<decltype(fn())>> {
    using R = decltype(fn());
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(fn));
    auto future = task->get_future();
    if (!push([task] { (*task)(); })) return std::nullopt;
    return future;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t pending() const;

 private:
  bool push(std::function<void()> job);
  void run();

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::function<void()>> jobs_;
  bool stopping_ = false;
  std::thread worker_;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t queue_capacity = 16;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// A loaded checkpoint (or a freshly initialized model) and where it came from.
struct LoadedModel {
  std::unique_ptr<TrainState> state;
  std::string source;
};

class GenerationService {
 public:
  /// `model` may be null; generation then answers 503.
  GenerationService(std::shared_ptr<LoadedModel> model, ServiceOptions options = {});
  ~GenerationService();

  /// Transport-free request handling; the HTTP server routes here.
  HttpReply handle(const std::string& method, const std::string& path, const std::string& body);

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  const ServiceOptions& options() const { return options_; }

 private:
  HttpReply generate(const std::string& body);
  HttpReply model_info() const;
  void install_routes();

  std::shared_ptr<LoadedModel> model_;
  ServiceOptions options_;
  nlohmann::json info_;
  WorkQueue queue_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
};

}  // namespace sgsynth
