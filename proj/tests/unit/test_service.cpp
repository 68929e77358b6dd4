// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <thread>

#include "sgsynth/error.hpp"
#include "sgsynth/image.hpp"
#include "sgsynth/service.hpp"

// resolv.h, pulled in by httplib, defines _res, which Eigen uses as a parameter name.
#include <httplib.h>

// After torch, whose logging headers define their own CHECK.
#include <doctest.h>

using namespace sgsynth;
using nlohmann::json;

namespace {

std::shared_ptr<LoadedModel> toy_model() {
  auto loaded = std::make_shared<LoadedModel>();
  loaded->state = std::make_unique<TrainState>(toy_model_config(), toy_train_config());
  loaded->source = "toy";
  return loaded;
}

std::string scene(double x, const char* color, const char* time, int seed) {
  json e = {{"class", "car"}, {"bbox", {x, 0.5, 0.25, 0.2}}, {"color", color}};
  return json{{"entities", {e}}, {"time_of_day", time}, {"seed", seed}}.dump();
}

RgbImage decode(const std::string& body) {
  return decode_png_rgb(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

}  // namespace

TEST_CASE("work queue runs jobs in order and refuses work when full") {
  WorkQueue queue(1);
  std::promise<void> gate;
  auto gate_future = gate.get_future().share();
  std::atomic<bool> started{false};
  auto first = queue.submit([&] {
    started = true;
    gate_future.wait();
    return 1;
  });
  REQUIRE(first);
  while (!started) std::this_thread::yield();
  auto second = queue.submit([] { return 2; });
  REQUIRE(second);
  CHECK(queue.pending() == 1);
  CHECK_FALSE(queue.submit([] { return 3; }).has_value());
  gate.set_value();
  CHECK(first->get() == 1);
  CHECK(second->get() == 2);
  CHECK_THROWS_AS(WorkQueue(0), DomainError);
}

TEST_CASE("without a model the service reports health and answers 503") {
  GenerationService service(nullptr);
  const auto health = service.handle("GET", "/health", "");
  CHECK(health.status == 200);
  CHECK(json::parse(health.body)["model_loaded"] == false);
  CHECK(service.handle("POST", "/generate", R"({"entities":[]})").status == 503);
  CHECK(service.handle("GET", "/model-info", "").status == 503);
  CHECK(service.handle("POST", "/generate", "{not json").status == 400);
  CHECK(service.handle("GET", "/palette", "").status == 200);
}

TEST_CASE("generation endpoint") {
  GenerationService service(toy_model());

  SUBCASE("empty scene gives a PNG with metadata headers") {
    const auto r = service.handle("POST", "/generate", R"({"entities":[],"seed":17})");
    REQUIRE(r.status == 200);
    CHECK(r.content_type == "image/png");
    CHECK(r.body.substr(1, 3) == "PNG");
    const auto img = decode(r.body);
    CHECK(img.height == 64);
    CHECK(img.width == 64);
    bool seed_header = false, latency_header = false;
    for (const auto& [k, v] : r.headers) {
      if (k == "X-Generation-Seed") seed_header = v == "17";
      if (k == "X-Generation-Latency-Ms") latency_header = std::stod(v) >= 0.0;
    }
    CHECK(seed_header);
    CHECK(latency_header);
  }
  SUBCASE("invalid palette name is 422 naming the palette") {
    const auto r = service.handle("POST", "/generate", scene(0.5, "purple", "12:00", 0));
    REQUIRE(r.status == 422);
    const auto errors = json::parse(r.body)["errors"];
    REQUIRE(errors.size() == 1);
    CHECK(errors[0]["field"] == "entities[0].color");
    CHECK(errors[0]["message"].get<std::string>().find("magenta") != std::string::npos);
  }
  SUBCASE("identical request and seed give identical bytes") {
    const auto body = scene(0.4, "red", "09:00", 5);
    const auto a = service.handle("POST", "/generate", body);
    const auto b = service.handle("POST", "/generate", body);
    REQUIRE(a.status == 200);
    CHECK(a.body == b.body);
    CHECK(service.handle("POST", "/generate", scene(0.4, "red", "09:00", 6)).body != a.body);
  }
  SUBCASE("model info and routing") {
    const auto info = json::parse(service.handle("GET", "/model-info", "").body);
    CHECK(info["variant"] == "discrete");
    CHECK(info["image_size"] == 64);
    CHECK(info["parameters"]["generator"].get<std::int64_t>() > 0);
    CHECK(service.handle("GET", "/nope", "").status == 404);
    CHECK(service.handle("GET", "/generate", "").status == 405);
    CHECK(service.handle("POST", "/generate", "[1,2").status == 400);
  }
}

TEST_CASE("concurrent HTTP clients each get the image for their own scene") {
  auto model = toy_model();
  ServiceOptions options;
  options.port = 0;
  GenerationService service(model, options);

  const std::vector<std::string> bodies = {
      scene(0.2, "red", "06:00", 1), scene(0.5, "blue", "12:00", 2), scene(0.8, "yellow", "18:00", 3),
      scene(0.3, "white", "23:00", 4), scene(0.6, "lime", "03:00", 5), scene(0.7, "gray", "15:30", 6)};
  std::vector<std::string> expected;
  for (const auto& b : bodies) expected.push_back(service.handle("POST", "/generate", b).body);

  const int port = service.start();
  REQUIRE(port > 0);
  constexpr int kRounds = 3;
  std::vector<std::thread> clients;
  std::atomic<int> mismatches{0}, failures{0};
  for (std::size_t c = 0; c < bodies.size(); ++c) {
    clients.emplace_back([&, c] {
      httplib::Client client("127.0.0.1", port);
      client.set_read_timeout(120, 0);
      for (int r = 0; r < kRounds; ++r) {
        // Interleave: each client walks the scenes from a different offset.
        const auto i = (c + static_cast<std::size_t>(r)) % bodies.size();
        const auto res = client.Post("/generate", bodies[i], "application/json");
        if (!res || res->status != 200) {
          ++failures;
          continue;
        }
        if (res->body != expected[i]) ++mismatches;
        if (res->get_header_value("X-Generation-Seed") != std::to_string(i + 1)) ++mismatches;
      }
    });
  }
  httplib::Client probe("127.0.0.1", port);
  const auto health = probe.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto palette = probe.Get("/palette");
  REQUIRE(palette);
  CHECK(json::parse(palette->body)["palette"].size() == 8);
  for (auto& t : clients) t.join();
  CHECK(failures == 0);
  CHECK(mismatches == 0);
  service.stop();
}
