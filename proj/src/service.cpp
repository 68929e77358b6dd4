// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/service.hpp"

#include <chrono>
#include <cstdio>

#include <httplib.h>

#include "sgsynth/error.hpp"
#include "sgsynth/image.hpp"
#include "sgsynth/pipeline.hpp"
#include "sgsynth/scene_request.hpp"

namespace sgsynth {

using nlohmann::json;

WorkQueue::WorkQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw DomainError("queue capacity must be positive");
  worker_ = std::thread([this] { run(); });
}

WorkQueue::~WorkQueue() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  ready_.notify_all();
  worker_.join();
}

std::size_t WorkQueue::pending() const {
  std::lock_guard lock(mutex_);
  return jobs_.size();
}

bool WorkQueue::push(std::function<void()> job) {
  {
    std::lock_guard lock(mutex_);
    if (stopping_ || jobs_.size() >= capacity_) return false;
    jobs_.push_back(std::move(job));
  }
  ready_.notify_one();
  return true;
}

void WorkQueue::run() {
  while (true) {
    std::function<void()> job;
    {
      std::unique_lock lock(mutex_);
      ready_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
      // Drain what was accepted before shutting down so no future is left broken.
      if (jobs_.empty()) return;
      job = std::move(jobs_.front());
      jobs_.pop_front();
    }
    job();
  }
}

namespace {

HttpReply json_reply(int status, const json& body) { return {status, "application/json", body.dump(), {}}; }

HttpReply error_reply(int status, const std::string& message) {
  return json_reply(status, {{"error", message}});
}

std::int64_t count_parameters(const std::vector<torch::Tensor>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

json describe(const LoadedModel& loaded) {
  const auto& model = loaded.state->model();
  json params = {{"condition", model.condition ? count_parameters(model.condition->parameters()) : 0},
                 {"generator", count_parameters(model.generator->parameters())},
                 {"discriminator", count_parameters(model.discriminator->parameters())}};
  return {{"source", loaded.source},
          {"step", loaded.state->step()},
          {"variant", std::string(to_string(model.config.variant))},
          {"image_size", model.config.image_size},
          {"lattice", to_json(model.config.lattice)},
          {"parameters", params},
          {"config", to_json(model.config)},
          {"request_version", kSceneRequestVersion}};
}

}  // namespace

GenerationService::GenerationService(std::shared_ptr<LoadedModel> model, ServiceOptions options)
    : model_(std::move(model)), options_(std::move(options)), queue_(options_.queue_capacity) {
  if (model_ && !model_->state) model_.reset();
  if (model_) info_ = describe(*model_);
}

GenerationService::~GenerationService() { stop(); }

HttpReply GenerationService::handle(const std::string& method, const std::string& path, const std::string& body) {
  if (path == "/health") {
    if (method != "GET") return error_reply(405, "use GET");
    return json_reply(200, {{"status", "ok"}, {"model_loaded", model_ != nullptr}, {"queued", queue_.pending()}});
  }
  if (path == "/palette") {
    if (method != "GET") return error_reply(405, "use GET");
    return json_reply(200, {{"palette", palette_json()}});
  }
  if (path == "/model-info") {
    if (method != "GET") return error_reply(405, "use GET");
    return model_info();
  }
  if (path == "/generate") {
    if (method != "POST") return error_reply(405, "use POST");
    return generate(body);
  }
  return error_reply(404, "no such endpoint: " + path);
}

HttpReply GenerationService::model_info() const {
  if (!model_) return error_reply(503, "no model is loaded");
  return json_reply(200, info_);
}

HttpReply GenerationService::generate(const std::string& body) {
  json parsed;
  try {
    parsed = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  }
  if (!model_) return error_reply(503, "no model is loaded");
  auto request = parse_scene_request(parsed, model_->state->model().config.variant);
  if (!request.ok()) return json_reply(422, field_errors_json(request.errors));

  auto model = model_;
  auto scene = std::move(*request.request);
  const auto seed = scene.seed;
  auto future = queue_.submit([model, scene = std::move(scene)]() -> std::pair<std::vector<std::uint8_t>, double> {
    const auto start = std::chrono::steady_clock::now();
    const auto image = generate_request(model->state->model(), scene);
    auto png = encode_png(image);
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    return {std::move(png), elapsed.count()};
  });
  if (!future) return error_reply(503, "generation queue is full; retry shortly");
  try {
    auto [png, latency] = future->get();
    HttpReply reply{200, "image/png", std::string(png.begin(), png.end()), {}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", latency);
    reply.headers.emplace_back("X-Generation-Latency-Ms", buf);
    reply.headers.emplace_back("X-Generation-Seed", std::to_string(seed));
    return reply;
  } catch (const DomainError& e) {
    return json_reply(422, field_errors_json({{"", e.what()}}));
  } catch (const std::exception& e) {
    return error_reply(500, std::string("generation failed: ") + e.what());
  }
}

void GenerationService::install_routes() {
  server_ = std::make_unique<httplib::Server>();
  const auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = handle(req.method, req.path, req.body);
    res.status = reply.status;
    for (const auto& [k, v] : reply.headers) res.set_header(k, v);
    res.set_content(reply.body, reply.content_type);
  };
  for (const char* path : {"/health", "/palette", "/model-info", "/generate"}) {
    server_->Get(path, route);
    server_->Post(path, route);
  }
}

int GenerationService::start() {
  install_routes();
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw IoError(options_.host + ":" + std::to_string(options_.port), "cannot bind the service port");
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void GenerationService::run() {
  install_routes();
  if (!server_->bind_to_port(options_.host, options_.port)) {
    throw IoError(options_.host + ":" + std::to_string(options_.port), "cannot bind the service port");
  }
  server_->listen_after_bind();
}

void GenerationService::stop() {
  if (server_) server_->stop();
  if (listener_.joinable()) listener_.join();
}

}  // namespace sgsynth
