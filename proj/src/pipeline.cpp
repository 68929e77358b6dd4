// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <random>

#include "sgsynth/error.hpp"
#include "sgsynth/image.hpp"

namespace sgsynth {

using nlohmann::json;
namespace fs = std::filesystem;

RgbImage generate_request(Model& model, const SceneRequest& request) {
  return generate_image(model, request.entities, encode_time(request.time_seconds), request.seed);
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path, std::string("not valid JSON: ") + e.what());
  }
}

std::string describe_errors(const std::vector<FieldError>& errors) {
  std::string out;
  for (const auto& e : errors) out += "\n  " + (e.field.empty() ? std::string("request") : e.field) + ": " + e.message;
  return out;
}

}  // namespace

SceneRequest read_scene_request(const fs::path& path, GraphVariant model_variant) {
  auto parsed = parse_scene_request(read_json(path), model_variant);
  if (!parsed.ok()) throw DomainError(path.string() + ": invalid scene request" + describe_errors(parsed.errors));
  return std::move(*parsed.request);
}

std::vector<FrameSource> read_frame_list(const fs::path& path) {
  const auto j = read_json(path);
  if (!j.is_array()) throw IoError(path, "frame list must be a JSON list");
  const auto base = path.parent_path();
  std::vector<FrameSource> frames;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    const auto where = "frame " + std::to_string(i) + ": ";
    try {
      FrameSource f;
      f.image = base / item.at("image").get<std::string>();
      f.detections = base / item.at("detections").get<std::string>();
      if (item.contains("time_of_day")) {
        f.timestamp = parse_time_of_day(item["time_of_day"].get<std::string>());
      } else if (item.contains("timestamp")) {
        f.timestamp = item["timestamp"].get<double>();
        encode_time(f.timestamp);
      } else {
        throw DomainError("needs time_of_day or timestamp");
      }
      frames.push_back(std::move(f));
    } catch (const json::exception& e) {
      throw IoError(path, where + e.what());
    } catch (const DomainError& e) {
      throw IoError(path, where + e.what());
    }
  }
  return frames;
}

json build_dataset(const fs::path& out, const DatasetInfo& info, const std::vector<FrameSource>& frames) {
  DatasetWriter writer(out, info);
  const DatapointOptions options{info.lattice, info.variant, info.split_seed};
  for (const auto& frame : frames) {
    auto image = read_png_rgb(frame.image);
    if (image.height != info.image_height || image.width != info.image_width) {
      image = resize(image, info.image_height, info.image_width);
    }
    const auto detections = read_detection_file(frame.detections);
    writer.append(build_datapoint(image, detections, frame.timestamp, options));
  }
  return writer.finish();
}

json build_synthetic_dataset(const fs::path& out, const SyntheticOptions& options, const SplitRatio& ratio,
                             std::uint64_t split_seed) {
  DatasetInfo info;
  info.variant = options.variant;
  info.lattice = options.lattice;
  info.image_height = options.image_size;
  info.image_width = options.image_size;
  info.split_ratio = ratio;
  info.split_seed = split_seed;
  DatasetWriter writer(out, info);
  for (const auto& point : synthesize_dataset(options)) writer.append(point);
  return writer.finish();
}

BBoxHistogram histogram_from_dataset(const DatasetReader& dataset, int bins_x, int bins_y) {
  BBoxHistogram hist(bins_x, bins_y);
  for (const auto index : dataset.indices(Split::Train)) {
    const auto graph = dataset.read(index).graph;
    for (int n = 0; n < graph.node_count(); ++n) {
      if (graph.kind(n) == EntityClass::Grid) continue;
      const auto f = graph.features(n);
      hist.add(BoxSample{graph.kind(n), {f[feature::kBBox], f[feature::kBBox + 1], f[feature::kBBox + 2],
                                         f[feature::kBBox + 3]}});
    }
  }
  return hist;
}

json frame_scene_json(const FrameScene& scene, GraphVariant variant, std::uint64_t seed) {
  SceneRequest request;
  request.entities = scene.entities;
  request.time_seconds = scene.timestamp;
  request.seed = seed;
  request.variant = variant;
  auto j = to_json(request);
  json errors = json::array();
  for (const auto& e : scene.errors) {
    errors.push_back({{"index", e.index}, {"vehicle_id", e.vehicle_id}, {"message", e.message}});
  }
  return {{"timestamp", scene.timestamp}, {"request", j}, {"errors", errors}};
}

std::vector<std::size_t> batch_indices(std::span<const std::size_t> pool, std::size_t batch_size, std::int64_t step,
                                       std::uint64_t seed) {
  if (pool.empty()) throw DomainError("no training items to draw batches from");
  const auto n = pool.size();
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  std::int64_t cached_epoch = -1;
  std::vector<std::size_t> perm;
  for (std::size_t k = 0; k < batch_size; ++k) {
    const auto position = static_cast<std::uint64_t>(step) * batch_size + k;
    const auto epoch = static_cast<std::int64_t>(position / n);
    if (epoch != cached_epoch) {
      perm.assign(pool.begin(), pool.end());
      std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch + 1)));
      for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
      cached_epoch = epoch;
    }
    out.push_back(perm[position % n]);
  }
  return out;
}

void run_training(TrainState& state, const DatasetReader& dataset, const TrainingRun& run,
                  const std::function<void(const LossReport&)>& on_step) {
  const auto& info = dataset.info();
  const auto& config = state.model().config;
  if (info.variant != config.variant) {
    throw DomainError("dataset uses the " + std::string(to_string(info.variant)) + " variant but the model uses " +
                      std::string(to_string(config.variant)));
  }
  if (info.image_height != config.image_size || info.image_width != config.image_size) {
    throw DomainError("dataset images are " + std::to_string(info.image_height) + "x" +
                      std::to_string(info.image_width) + " but the model generates " +
                      std::to_string(config.image_size) + "x" + std::to_string(config.image_size));
  }
  if (!(info.lattice == config.lattice)) throw DomainError("dataset lattice differs from the model lattice");
  const auto pool = dataset.indices(Split::Train);
  if (pool.size() < 2) throw DomainError("training needs at least 2 training items");

  std::error_code ec;
  fs::create_directories(run.out_dir, ec);
  if (ec) throw IoError(run.out_dir, "cannot create output directory: " + ec.message());
  const auto log_path = run.out_dir / "losses.jsonl";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError(log_path, "cannot write loss log");

  const auto& train = state.train_config();
  for (std::int64_t i = 0; i < run.steps; ++i) {
    const auto indices = batch_indices(pool, static_cast<std::size_t>(train.batch_size), state.step(), train.seed);
    std::vector<DataPoint> batch;
    batch.reserve(indices.size());
    for (const auto index : indices) batch.push_back(dataset.read(index));
    const auto report = state.train_step(batch);
    log << to_json(report).dump() << '\n';
    log.flush();
    if (on_step) on_step(report);
    if (run.checkpoint_every > 0 && state.step() % run.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "step-%08lld.ckpt", static_cast<long long>(state.step()));
      state.save(run.out_dir / name);
    }
  }
  state.save(run.out_dir / "final.ckpt");
}

}  // namespace sgsynth
