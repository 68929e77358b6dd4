// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "sgsynth/color.hpp"
#include "sgsynth/error.hpp"

namespace sgsynth {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kManifestVersion = 1;

void paint(SegmentationMap& map, const BBox& box, std::uint8_t label) {
  const auto rect = pixel_rect(box, map.height, map.width);
  for (int y = rect.y0; y < rect.y1; ++y) {
    std::fill_n(map.labels.begin() + static_cast<std::ptrdiff_t>(y) * map.width + rect.x0, rect.x1 - rect.x0,
                label);
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path, std::string("invalid JSON: ") + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open file for writing");
  out << text;
  if (!out) throw IoError(path, "write failed");
}

std::string entry_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw DomainError("unknown split '" + s + "'");
}

}  // namespace

SegmentationMap rasterize_segmentation_map(std::span<const Detection> detections, int height, int width) {
  if (height <= 0 || width <= 0) throw DomainError("segmentation map size must be positive");
  SegmentationMap map{height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 0)};
  std::vector<const Detection*> ordered;
  for (const auto& d : detections) ordered.push_back(&d);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Detection* a, const Detection* b) { return a->order_index < b->order_index; });
  for (const auto* d : ordered) paint(map, d->bbox, static_cast<std::uint8_t>(segmentation_label(d->entity_class)));
  return map;
}

SegmentationMap rasterize_scene(std::span<const SceneEntity> entities, int height, int width) {
  if (height <= 0 || width <= 0) throw DomainError("segmentation map size must be positive");
  SegmentationMap map{height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 0)};
  for (const auto& e : entities) paint(map, e.bbox, static_cast<std::uint8_t>(segmentation_label(e.entity_class)));
  return map;
}

std::vector<SceneEntity> detections_to_entities(const RgbImage& image, std::span<const Detection> detections,
                                                GraphVariant variant, std::uint64_t color_seed) {
  std::set<int> seen;
  std::vector<const Detection*> ordered;
  for (const auto& d : detections) {
    if (!seen.insert(d.order_index).second) {
      throw DomainError("duplicate detection order index " + std::to_string(d.order_index));
    }
    ordered.push_back(&d);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const Detection* a, const Detection* b) { return a->order_index < b->order_index; });

  std::vector<SceneEntity> entities;
  for (const auto* d : ordered) {
    validate(d->bbox);
    const auto rect = d->crop.value_or(pixel_rect(d->bbox, image.height, image.width));
    auto pixels = crop_pixels(image, rect);
    if (pixels.empty()) {
      // Sub-pixel boxes: use the pixel under the box center.
      const int x = std::clamp(static_cast<int>(d->bbox.x * image.width), 0, image.width - 1);
      const int y = std::clamp(static_cast<int>(d->bbox.y * image.height), 0, image.height - 1);
      pixels = crop_pixels(image, {x, y, x + 1, y + 1});
    }
    entities.push_back({d->entity_class, d->bbox, featurize_color(pixels, variant, color_seed)});
  }
  return entities;
}

DataPoint build_datapoint(const RgbImage& image, std::span<const Detection> detections, double timestamp,
                          const DatapointOptions& options) {
  if (image.height <= 0 || image.width <= 0) throw DomainError("image is empty");
  const auto entities = detections_to_entities(image, detections, options.variant, options.color_seed);
  DataPoint point;
  point.segmap = rasterize_segmentation_map(detections, image.height, image.width);
  point.graph = build_scene_graph(entities, encode_time(timestamp), options.lattice, options.variant);
  point.image = image;
  point.timestamp = timestamp;
  return point;
}

std::vector<Detection> detections_from_json(const json& j) {
  if (!j.is_array()) throw DomainError("detection file must hold a JSON list");
  std::vector<Detection> out;
  int order = 0;
  for (const auto& item : j) {
    Detection d;
    d.entity_class = parse_entity_class(item.at("class").get<std::string>());
    if (d.entity_class == EntityClass::Grid) throw DomainError("detections cannot have class grid");
    d.bbox = {item.at("x").get<double>(), item.at("y").get<double>(), item.at("w").get<double>(),
              item.at("h").get<double>()};
    validate(d.bbox);
    d.order_index = order++;
    out.push_back(d);
  }
  return out;
}

std::vector<Detection> read_detection_file(const fs::path& path) {
  const auto j = read_json_file(path);
  try {
    return detections_from_json(j);
  } catch (const DomainError& e) {
    throw IoError(path, e.what());
  } catch (const json::exception& e) {
    throw IoError(path, e.what());
  }
}

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split assign_split(std::size_t index, const SplitRatio& ratio, std::uint64_t seed) {
  const auto total = ratio.train + ratio.test;
  if (ratio.train < 0 || ratio.test < 0 || total <= 0) throw DomainError("invalid split ratio");
  const double u = static_cast<double>(splitmix64(seed ^ splitmix64(index)) >> 11) * 0x1.0p-53;
  return u < static_cast<double>(ratio.test) / static_cast<double>(total) ? Split::Test : Split::Train;
}

DatasetWriter::DatasetWriter(fs::path root, DatasetInfo info) : root_(std::move(root)), info_(info) {
  validate(info_.lattice);
  std::error_code ec;
  for (const char* sub : {"images", "segmaps", "graphs"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) throw IoError(root_ / sub, "cannot create directory: " + ec.message());
  }
}

Split DatasetWriter::append(const DataPoint& point) {
  if (point.graph.variant() != info_.variant) throw DomainError("data point graph variant differs from dataset");
  if (point.graph.lattice() != info_.lattice) throw DomainError("data point lattice differs from dataset");
  if (point.image.height != info_.image_height || point.image.width != info_.image_width ||
      point.segmap.height != point.image.height || point.segmap.width != point.image.width) {
    throw DomainError("data point size differs from dataset");
  }

  const auto index = entries_.size();
  const auto id = entry_id(index);
  const auto split = assign_split(index, info_.split_ratio, info_.split_seed);
  const fs::path image = fs::path("images") / (id + ".png");
  const fs::path segmap = fs::path("segmaps") / (id + ".png");
  const fs::path graph = fs::path("graphs") / (id + ".json");

  write_png(root_ / image, point.image);
  write_png(root_ / segmap, GrayImage{point.segmap.height, point.segmap.width, point.segmap.labels});
  write_text_file(root_ / graph, to_json(point.graph).dump());

  entries_.push_back({{"id", id},
                      {"image", image.generic_string()},
                      {"segmap", segmap.generic_string()},
                      {"graph", graph.generic_string()},
                      {"timestamp", point.timestamp},
                      {"split", to_string(split)}});
  ++counts_[static_cast<int>(split)];
  return split;
}

json DatasetWriter::finish() {
  json manifest = {
      {"format", "sgsynth-dataset"},
      {"version", kManifestVersion},
      {"count", entries_.size()},
      {"variant", to_string(info_.variant)},
      {"lattice", to_json(info_.lattice)},
      {"image_size", {{"height", info_.image_height}, {"width", info_.image_width}}},
      {"split_ratio", {{"train", info_.split_ratio.train}, {"test", info_.split_ratio.test}}},
      {"split_seed", info_.split_seed},
      {"split_counts", {{"train", counts_[0]}, {"test", counts_[1]}}},
      {"entries", entries_},
  };
  write_text_file(root_ / "manifest.json", manifest.dump(2));
  return manifest;
}

DatasetReader::DatasetReader(fs::path root) : root_(std::move(root)) {
  const auto path = root_ / "manifest.json";
  if (!fs::exists(path)) throw IoError(path, "dataset manifest not found");
  const auto manifest = read_json_file(path);
  try {
    if (manifest.at("format").get<std::string>() != "sgsynth-dataset") throw IoError(path, "not a dataset manifest");
    if (manifest.at("version").get<int>() != kManifestVersion) throw IoError(path, "unsupported manifest version");
    info_.variant = parse_graph_variant(manifest.at("variant").get<std::string>());
    info_.lattice = lattice_spec_from_json(manifest.at("lattice"));
    info_.image_height = manifest.at("image_size").at("height").get<int>();
    info_.image_width = manifest.at("image_size").at("width").get<int>();
    info_.split_ratio = {manifest.at("split_ratio").at("train").get<std::int64_t>(),
                         manifest.at("split_ratio").at("test").get<std::int64_t>()};
    info_.split_seed = manifest.at("split_seed").get<std::uint64_t>();
    entries_ = manifest.at("entries");
    const auto count = manifest.at("count").get<std::size_t>();
    if (!entries_.is_array() || entries_.size() != count) {
      throw IoError(path, "manifest count " + std::to_string(count) + " does not match its " +
                              std::to_string(entries_.size()) + " entries");
    }
    for (const auto& e : entries_) {
      for (const char* key : {"image", "segmap", "graph"}) {
        const auto file = root_ / e.at(key).get<std::string>();
        if (!fs::exists(file)) throw IoError(file, "listed in manifest but missing");
      }
      parse_split(e.at("split").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw IoError(path, std::string("corrupt manifest: ") + e.what());
  } catch (const DomainError& e) {
    throw IoError(path, std::string("corrupt manifest: ") + e.what());
  }
}

Split DatasetReader::split(std::size_t index) const {
  return parse_split(entries_.at(index).at("split").get<std::string>());
}

std::vector<std::size_t> DatasetReader::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (split(i) == s) out.push_back(i);
  }
  return out;
}

DataPoint DatasetReader::read(std::size_t index) const {
  const auto& e = entries_.at(index);
  DataPoint point;
  point.image = read_png_rgb(root_ / e.at("image").get<std::string>());
  const auto segmap_path = root_ / e.at("segmap").get<std::string>();
  auto gray = read_png_gray(segmap_path);
  for (auto v : gray.data) {
    if (v >= kSegmentationClasses) throw IoError(segmap_path, "segmentation label out of range");
  }
  point.segmap = {gray.height, gray.width, std::move(gray.data)};
  const auto graph_path = root_ / e.at("graph").get<std::string>();
  try {
    point.graph = scene_graph_from_json(read_json_file(graph_path));
  } catch (const DomainError& err) {
    throw IoError(graph_path, err.what());
  }
  point.timestamp = e.at("timestamp").get<double>();
  return point;
}

std::vector<DataPoint> DatasetReader::read_all() const {
  std::vector<DataPoint> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(read(i));
  return out;
}

}  // namespace sgsynth
