// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// (segmentation map, scene graph, image) triples and their on-disk layout.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgsynth/image.hpp"
#include "sgsynth/scene_graph.hpp"

namespace sgsynth {

inline constexpr int kSegmentationClasses = 5;  // background, bus, truck, car, person

struct Detection {
  EntityClass entity_class = EntityClass::Car;
  BBox bbox;
  int order_index = 0;
  /// Region used for color featurization; defaults to the bbox's pixels.
  std::optional<PixelRect> crop;
};

/// H x W labels in [0,4]: 0 background, 1 bus, 2 truck, 3 car, 4 person.
struct SegmentationMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;

  std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const SegmentationMap&) const = default;
};

struct DataPoint {
  SegmentationMap segmap;
  SceneGraph graph;
  RgbImage image;
  double timestamp = 0.0;

  bool operator==(const DataPoint&) const = default;
};

/// Paints boxes in ascending order_index over a background of zeros; later
/// detections win on overlaps.
SegmentationMap rasterize_segmentation_map(std::span<const Detection> detections, int height, int width);

/// Same as above for placed scene entities, painted in list order.
SegmentationMap rasterize_scene(std::span<const SceneEntity> entities, int height, int width);

struct DatapointOptions {
  LatticeSpec lattice;
  GraphVariant variant = GraphVariant::Discrete;
  std::uint64_t color_seed = 0;
};

/// Scene entities (color featurized from each detection's crop) in emission order.
std::vector<SceneEntity> detections_to_entities(const RgbImage& image, std::span<const Detection> detections,
                                                GraphVariant variant, std::uint64_t color_seed);

DataPoint build_datapoint(const RgbImage& image, std::span<const Detection> detections, double timestamp,
                          const DatapointOptions& options);

/// Produces detections for a frame. Implementations may wrap an external detector.
using Detector = std::function<std::vector<Detection>(const RgbImage&)>;

/// Parses a detection file: a JSON list of {class, x, y, w, h} in emission order.
std::vector<Detection> detections_from_json(const nlohmann::json& j);
std::vector<Detection> read_detection_file(const std::filesystem::path& path);

struct SplitRatio {
  std::int64_t train = 10322;
  std::int64_t test = 630;
};

enum class Split : std::uint8_t { Train, Test };
std::string_view to_string(Split s);

struct DatasetInfo {
  GraphVariant variant = GraphVariant::Discrete;
  LatticeSpec lattice;
  int image_height = 640;
  int image_width = 640;
  SplitRatio split_ratio;
  std::uint64_t split_seed = 0;
};

/// Appends data points under `root` (images/, segmaps/, graphs/) and writes
/// manifest.json on finish(). Single writer.
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path root, DatasetInfo info);

  /// Throws DomainError if the point's variant, lattice or size differ from the dataset's.
  Split append(const DataPoint& point);
  /// Writes the manifest; returns its JSON.
  nlohmann::json finish();

 private:
  std::filesystem::path root_;
  DatasetInfo info_;
  nlohmann::json entries_ = nlohmann::json::array();
  std::int64_t counts_[2] = {0, 0};
};

/// Reads a dataset written by DatasetWriter. The constructor validates the manifest.
class DatasetReader {
 public:
  explicit DatasetReader(std::filesystem::path root);

  const DatasetInfo& info() const { return info_; }
  std::size_t size() const { return entries_.size(); }
  Split split(std::size_t index) const;
  std::vector<std::size_t> indices(Split s) const;
  DataPoint read(std::size_t index) const;
  std::vector<DataPoint> read_all() const;

 private:
  std::filesystem::path root_;
  DatasetInfo info_;
  nlohmann::json entries_;
};

/// Deterministic split for item `index`: test with probability test / (train + test).
Split assign_split(std::size_t index, const SplitRatio& ratio, std::uint64_t seed);

}  // namespace sgsynth
