// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/sumo_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "sgsynth/color.hpp"
#include "sgsynth/error.hpp"

namespace sgsynth {

using nlohmann::json;

void validate_waypoints(std::span<const WaypointPair> waypoints) {
  if (waypoints.size() < 2) throw DomainError("a lane needs at least 2 waypoint pairs");
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const auto& w = waypoints[i];
    if (!(w.image_arclength >= 0.0 && w.image_arclength <= 1.0)) {
      throw DomainError("waypoint image arclength must lie in [0,1]");
    }
    if (i > 0 && !(w.sim_offset > waypoints[i - 1].sim_offset &&
                   w.image_arclength > waypoints[i - 1].image_arclength)) {
      throw DomainError("waypoints must be strictly increasing in both simulator offset and image arclength");
    }
  }
}

void LaneCorrespondence::add_lane(const std::string& lane_id, std::span<const Point2> control_points,
                                  std::vector<WaypointPair> waypoints) {
  validate_waypoints(waypoints);
  if (has_lane(lane_id)) throw DomainError("duplicate lane '" + lane_id + "'");
  lanes_.emplace(lane_id, LaneMapping{LaneSpline(control_points, lane_id), std::move(waypoints)});
}

const LaneMapping& LaneCorrespondence::lane(const std::string& lane_id) const {
  const auto it = lanes_.find(lane_id);
  if (it == lanes_.end()) throw DomainError("unknown lane '" + lane_id + "'");
  return it->second;
}

double lane_arclength(const LaneMapping& lane, double sim_offset) {
  const auto& wps = lane.waypoints;
  if (sim_offset <= wps.front().sim_offset) return wps.front().image_arclength;
  if (sim_offset >= wps.back().sim_offset) return wps.back().image_arclength;
  const auto it = std::upper_bound(wps.begin(), wps.end(), sim_offset,
                                   [](double v, const WaypointPair& w) { return v < w.sim_offset; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  if (sim_offset == lo.sim_offset) return lo.image_arclength;
  const double f = (sim_offset - lo.sim_offset) / (hi.sim_offset - lo.sim_offset);
  return lo.image_arclength + f * (hi.image_arclength - lo.image_arclength);
}

Point2 map_lane_position(const LaneCorrespondence& corr, const std::string& lane_id, double sim_offset) {
  const auto& lane = corr.lane(lane_id);
  return lane.spline.at_normalized_arclength(lane_arclength(lane, sim_offset));
}

json to_json(const LaneCorrespondence& corr) {
  json lanes = json::object();
  for (const auto& [id, lane] : corr.lanes()) {
    json points = json::array();
    for (const auto& p : lane.spline.control_points()) points.push_back({p.x, p.y});
    json waypoints = json::array();
    for (const auto& w : lane.waypoints) {
      waypoints.push_back({{"sim_offset", w.sim_offset}, {"image_arclength", w.image_arclength}});
    }
    lanes[id] = {{"control_points", std::move(points)}, {"waypoints", std::move(waypoints)}};
  }
  return {{"lanes", std::move(lanes)}};
}

LaneCorrespondence lane_correspondence_from_json(const json& j) {
  LaneCorrespondence corr;
  try {
    for (const auto& [id, lane] : j.at("lanes").items()) {
      std::vector<Point2> points;
      for (const auto& p : lane.at("control_points")) {
        if (p.is_array()) {
          points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        } else {
          points.push_back({p.at("x").get<double>(), p.at("y").get<double>()});
        }
      }
      std::vector<WaypointPair> waypoints;
      for (const auto& w : lane.at("waypoints")) {
        waypoints.push_back({w.at("sim_offset").get<double>(), w.at("image_arclength").get<double>()});
      }
      try {
        corr.add_lane(id, points, std::move(waypoints));
      } catch (const DomainError& e) {
        throw DomainError("lane '" + id + "': " + e.what());
      }
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed lane correspondence: ") + e.what());
  }
  return corr;
}

LaneCorrespondence read_lane_correspondence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open lane correspondence");
  try {
    return lane_correspondence_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw IoError(path, std::string("invalid JSON: ") + e.what());
  } catch (const DomainError& e) {
    throw IoError(path, e.what());
  }
}

// --- histogram ---------------------------------------------------------------

BBoxHistogram::BBoxHistogram(int bins_x, int bins_y, bool merge_neighbors)
    : bins_x_(bins_x), bins_y_(bins_y), merge_neighbors_(merge_neighbors) {
  if (bins_x < 1 || bins_y < 1) throw DomainError("histogram needs at least one bin per axis");
  for (auto& b : bins_) b.resize(static_cast<std::size_t>(bins_x * bins_y));
}

std::pair<int, int> BBoxHistogram::bin_of(Point2 p) const {
  const int col = std::clamp(static_cast<int>(std::floor(p.x * bins_x_)), 0, bins_x_ - 1);
  const int row = std::clamp(static_cast<int>(std::floor(p.y * bins_y_)), 0, bins_y_ - 1);
  return {col, row};
}

void BBoxHistogram::add(const BoxSample& sample) {
  if (sample.entity_class == EntityClass::Grid) throw DomainError("histogram samples cannot be grid nodes");
  validate(sample.bbox);
  const auto [col, row] = bin_of({sample.bbox.x, sample.bbox.y});
  const auto c = static_cast<std::size_t>(sample.entity_class);
  bins_[c][static_cast<std::size_t>(row * bins_x_ + col)].emplace_back(sample.bbox.w, sample.bbox.h);
  global_[c].emplace_back(sample.bbox.w, sample.bbox.h);
  samples_.push_back(sample);
}

void BBoxHistogram::add(std::span<const BoxSample> samples) {
  for (const auto& s : samples) add(s);
}

const BBoxHistogram::Sizes& BBoxHistogram::bin(EntityClass c, int col, int row) const {
  return bins_[static_cast<std::size_t>(c)][static_cast<std::size_t>(row * bins_x_ + col)];
}

std::size_t BBoxHistogram::bin_size(EntityClass c, int col, int row) const { return bin(c, col, row).size(); }

BBox BBoxHistogram::sample_bbox(Point2 point, EntityClass c, std::uint64_t seed, SizeDraw draw) const {
  if (c == EntityClass::Grid) throw DomainError("cannot size a grid node");
  const auto [col, row] = bin_of(point);

  Sizes pool = bin(c, col, row);
  if (pool.empty() && merge_neighbors_) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = row + dr;
        const int cc = col + dc;
        if ((dr == 0 && dc == 0) || r < 0 || r >= bins_y_ || cc < 0 || cc >= bins_x_) continue;
        const auto& b = bin(c, cc, r);
        pool.insert(pool.end(), b.begin(), b.end());
      }
    }
  }
  if (pool.empty()) pool = global_[static_cast<std::size_t>(c)];
  if (pool.empty()) throw DomainError("no box sizes recorded for class " + std::string(to_string(c)));

  double w = 0.0;
  double h = 0.0;
  if (draw == SizeDraw::Median) {
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const auto n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    std::vector<double> ws, hs;
    for (const auto& [pw, ph] : pool) {
      ws.push_back(pw);
      hs.push_back(ph);
    }
    w = median(std::move(ws));
    h = median(std::move(hs));
  } else {
    std::mt19937_64 rng(seed);
    const auto& pick = pool[static_cast<std::size_t>(rng() % pool.size())];
    w = pick.first;
    h = pick.second;
  }

  const double x0 = std::max(0.0, point.x - w / 2);
  const double x1 = std::min(1.0, point.x + w / 2);
  const double y0 = std::max(0.0, point.y - h / 2);
  const double y1 = std::min(1.0, point.y + h / 2);
  if (!(x1 > x0) || !(y1 > y0)) throw DomainError("sampled box falls outside the image");
  if (x0 == point.x - w / 2 && x1 == point.x + w / 2 && y0 == point.y - h / 2 && y1 == point.y + h / 2) {
    return {point.x, point.y, w, h};
  }
  return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
}

json BBoxHistogram::to_json() const {
  json samples = json::array();
  for (const auto& s : samples_) {
    samples.push_back({{"class", sgsynth::to_string(s.entity_class)},
                       {"x", s.bbox.x},
                       {"y", s.bbox.y},
                       {"w", s.bbox.w},
                       {"h", s.bbox.h}});
  }
  return {{"bins_x", bins_x_}, {"bins_y", bins_y_}, {"merge_neighbors", merge_neighbors_}, {"samples", samples}};
}

BBoxHistogram BBoxHistogram::from_json(const json& j) {
  try {
    BBoxHistogram hist(j.value("bins_x", 8), j.value("bins_y", 8), j.value("merge_neighbors", true));
    for (const auto& s : j.at("samples")) {
      hist.add({parse_entity_class(s.at("class").get<std::string>()),
                {s.at("x").get<double>(), s.at("y").get<double>(), s.at("w").get<double>(), s.at("h").get<double>()}});
    }
    return hist;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed box histogram: ") + e.what());
  }
}

BBox sample_bbox(const BBoxHistogram& hist, Point2 point, EntityClass c, std::uint64_t seed, SizeDraw draw) {
  return hist.sample_bbox(point, c, seed, draw);
}

// --- frames ------------------------------------------------------------------

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double wrap_day(double seconds) {
  double s = std::fmod(seconds, kSecondsPerDay);
  if (s < 0) s += kSecondsPerDay;
  return s;
}

double parse_timestamp(const json& v) {
  if (v.is_string()) return parse_time_of_day(v.get<std::string>());
  return wrap_day(v.get<double>());
}

VehicleState vehicle_from_json(const json& v) {
  VehicleState s;
  try {
    s.vehicle_id = v.value("id", std::string{});
    s.lane_id = v.at("lane_id").get<std::string>();
    s.offset = v.at("offset").get<double>();
    s.entity_class = parse_entity_class(v.at("class").get<std::string>());
    s.color = v.value("color", std::string("gray"));
    if (v.contains("time")) s.timestamp = parse_timestamp(v.at("time"));
    if (v.contains("timestamp")) s.timestamp = parse_timestamp(v.at("timestamp"));
  } catch (const json::exception& e) {
    s.parse_error = e.what();
  } catch (const DomainError& e) {
    s.parse_error = e.what();
  }
  return s;
}

SimFrame frame_from_json(const json& j) {
  SimFrame frame;
  const json* vehicles = &j;
  bool explicit_time = false;
  if (j.is_object()) {
    vehicles = &j.at("vehicles");
    if (j.contains("timestamp")) {
      frame.timestamp = parse_timestamp(j.at("timestamp"));
      explicit_time = true;
    }
  }
  for (const auto& v : *vehicles) frame.vehicles.push_back(vehicle_from_json(v));
  if (!explicit_time && !frame.vehicles.empty()) frame.timestamp = frame.vehicles.front().timestamp;
  return frame;
}

bool looks_like_frame(const json& j) {
  if (j.is_object()) return j.contains("vehicles");
  return j.is_array() && (j.empty() || (j.front().is_object() && !j.front().contains("vehicles")));
}

}  // namespace

ColorFeature simulator_color(const std::string& declared, GraphVariant variant) {
  Rgb rgb;
  PaletteColor snapped;
  if (!declared.empty() && declared.front() == '#') {
    if (declared.size() != 7) throw DomainError("color '" + declared + "' is not #rrggbb");
    const auto byte = [&](std::size_t at) {
      return static_cast<std::uint8_t>(std::stoi(declared.substr(at, 2), nullptr, 16));
    };
    try {
      rgb = from_bytes(byte(1), byte(3), byte(5));
    } catch (const std::exception&) {
      throw DomainError("color '" + declared + "' is not #rrggbb");
    }
    snapped = nearest_palette_color(rgb);
  } else {
    snapped = parse_palette_color(declared);
    rgb = palette_rgb(snapped);
  }
  if (variant == GraphVariant::Cluster) return single_color_clusters(rgb);
  return DiscreteColor{snapped};
}

FrameScene sim_frame_to_scene(const SimFrame& frame, const LaneCorrespondence& corr, const BBoxHistogram& hist,
                              const FrameConversionOptions& options) {
  FrameScene scene;
  scene.timestamp = wrap_day(frame.timestamp);
  scene.time = encode_time(scene.timestamp);
  for (std::size_t i = 0; i < frame.vehicles.size(); ++i) {
    const auto& v = frame.vehicles[i];
    try {
      if (!v.parse_error.empty()) throw DomainError("invalid vehicle state: " + v.parse_error);
      if (v.entity_class == EntityClass::Grid) throw DomainError("vehicles cannot have class grid");
      const Point2 p = map_lane_position(corr, v.lane_id, v.offset);
      if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
        throw DomainError("lane '" + v.lane_id + "' maps outside the image");
      }
      SceneEntity e;
      e.entity_class = v.entity_class;
      e.bbox = hist.sample_bbox(p, v.entity_class, mix_seed(options.seed, i), options.draw);
      e.color = simulator_color(v.color, options.variant);
      scene.entities.push_back(e);
    } catch (const DomainError& err) {
      scene.errors.push_back({i, v.vehicle_id, err.what()});
    }
  }
  return scene;
}

std::vector<SimFrame> sim_frames_from_json(const json& j) {
  try {
    if (looks_like_frame(j)) return {frame_from_json(j)};
    std::vector<SimFrame> frames;
    for (const auto& f : j) frames.push_back(frame_from_json(f));
    return frames;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed simulator frame: ") + e.what());
  }
}

std::vector<SimFrame> read_sim_frames(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open simulator frames");
  try {
    return sim_frames_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw IoError(path, std::string("invalid JSON: ") + e.what());
  } catch (const DomainError& e) {
    throw IoError(path, e.what());
  }
}

}  // namespace sgsynth
