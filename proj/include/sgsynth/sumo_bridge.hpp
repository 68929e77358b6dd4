// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Simulator lane offsets -> image-frame boxes -> scene entities.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgsynth/spline.hpp"

namespace sgsynth {

struct WaypointPair {
  double sim_offset = 0.0;      // meters along the simulator lane
  double image_arclength = 0.0; // fraction of the lane spline's arclength

  bool operator==(const WaypointPair&) const = default;
};

struct LaneMapping {
  LaneSpline spline;
  std::vector<WaypointPair> waypoints;
};

/// Throws DomainError unless there are >= 2 waypoints, strictly increasing in
/// both coordinates, with arclengths in [0,1].
void validate_waypoints(std::span<const WaypointPair> waypoints);

class LaneCorrespondence {
 public:
  void add_lane(const std::string& lane_id, std::span<const Point2> control_points,
                std::vector<WaypointPair> waypoints);

  bool has_lane(const std::string& lane_id) const { return lanes_.count(lane_id) > 0; }
  const LaneMapping& lane(const std::string& lane_id) const;
  const std::map<std::string, LaneMapping>& lanes() const { return lanes_; }

 private:
  std::map<std::string, LaneMapping> lanes_;
};

/// Normalized arclength for a simulator offset: piecewise-linear between the
/// bracketing waypoints, clamped to the waypoint span.
double lane_arclength(const LaneMapping& lane, double sim_offset);

/// Image point for a simulator offset. Throws DomainError for unknown lanes.
Point2 map_lane_position(const LaneCorrespondence& corr, const std::string& lane_id, double sim_offset);

nlohmann::json to_json(const LaneCorrespondence& corr);
LaneCorrespondence lane_correspondence_from_json(const nlohmann::json& j);
LaneCorrespondence read_lane_correspondence(const std::filesystem::path& path);

struct BoxSample {
  EntityClass entity_class = EntityClass::Car;
  BBox bbox;
};

enum class SizeDraw : std::uint8_t { Median, Random };

/// Spatially binned (w, h) distributions per class.
class BBoxHistogram {
 public:
  explicit BBoxHistogram(int bins_x = 8, int bins_y = 8, bool merge_neighbors = true);

  void add(const BoxSample& sample);
  void add(std::span<const BoxSample> samples);

  int bins_x() const { return bins_x_; }
  int bins_y() const { return bins_y_; }
  /// (col, row) of the bin containing p.
  std::pair<int, int> bin_of(Point2 p) const;
  std::size_t bin_size(EntityClass c, int col, int row) const;

  /// Box of a sampled (w, h) centered at `point`, clipped to [0,1]^2. Median
  /// draws are seed independent; random draws are deterministic given the seed.
  /// Falls back to the 8 neighboring bins, then to the class-global sizes.
  /// Throws DomainError when the class has no data at all.
  BBox sample_bbox(Point2 point, EntityClass c, std::uint64_t seed, SizeDraw draw = SizeDraw::Median) const;

  nlohmann::json to_json() const;
  static BBoxHistogram from_json(const nlohmann::json& j);

 private:
  using Sizes = std::vector<std::pair<double, double>>;
  const Sizes& bin(EntityClass c, int col, int row) const;

  int bins_x_;
  int bins_y_;
  bool merge_neighbors_;
  std::array<std::vector<Sizes>, 4> bins_;
  std::array<Sizes, 4> global_;
  std::vector<BoxSample> samples_;
};

BBox sample_bbox(const BBoxHistogram& hist, Point2 point, EntityClass c, std::uint64_t seed,
                 SizeDraw draw = SizeDraw::Median);

/// One simulator vehicle in a frame snapshot.
struct VehicleState {
  std::string vehicle_id;
  std::string lane_id;
  double offset = 0.0;
  EntityClass entity_class = EntityClass::Car;
  /// Palette name ("red", ...) or "#rrggbb".
  std::string color = "gray";
  double timestamp = 0.0;
  /// Set when the state could not be parsed; the vehicle is then reported, not converted.
  std::string parse_error;
};

struct SimFrame {
  double timestamp = 0.0;
  std::vector<VehicleState> vehicles;
};

struct VehicleError {
  std::size_t index = 0;
  std::string vehicle_id;
  std::string message;
};

struct FrameScene {
  std::vector<SceneEntity> entities;
  TimeEncoding time;
  double timestamp = 0.0;
  std::vector<VehicleError> errors;
};

struct FrameConversionOptions {
  GraphVariant variant = GraphVariant::Discrete;
  std::uint64_t seed = 0;
  SizeDraw draw = SizeDraw::Median;
};

/// Simulator color declaration -> color feature for the variant.
ColorFeature simulator_color(const std::string& declared, GraphVariant variant);

/// Converts every vehicle it can; failures are listed per vehicle and the rest
/// of the frame is still converted.
FrameScene sim_frame_to_scene(const SimFrame& frame, const LaneCorrespondence& corr, const BBoxHistogram& hist,
                              const FrameConversionOptions& options = {});

/// Accepts a list of vehicle states (one frame), an object {timestamp, vehicles},
/// or a list of either (several frames).
std::vector<SimFrame> sim_frames_from_json(const nlohmann::json& j);
std::vector<SimFrame> read_sim_frames(const std::filesystem::path& path);

}  // namespace sgsynth
