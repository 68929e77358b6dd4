// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/scene_request.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sgsynth/color.hpp"
#include "sgsynth/error.hpp"
#include "sgsynth/sumo_bridge.hpp"

namespace sgsynth {

using nlohmann::json;

namespace {

class Collector {
 public:
  void add(std::string field, std::string message) { errors.push_back({std::move(field), std::move(message)}); }
  std::vector<FieldError> errors;
};

std::optional<BBox> parse_bbox(const json& j, const std::string& field, Collector& out) {
  BBox box;
  auto number = [&](const json& v, const char* name, double& dst) {
    if (!v.is_number()) {
      out.add(field + "." + name, "must be a number");
      return false;
    }
    dst = v.get<double>();
    return true;
  };
  bool ok = true;
  if (j.is_array()) {
    if (j.size() != 4) {
      out.add(field, "must be [x, y, w, h]");
      return std::nullopt;
    }
    ok = number(j[0], "x", box.x) & number(j[1], "y", box.y) & number(j[2], "w", box.w) & number(j[3], "h", box.h);
  } else if (j.is_object()) {
    for (const char* key : {"x", "y", "w", "h"}) {
      if (!j.contains(key)) {
        out.add(field + "." + key, "is required");
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    ok = number(j["x"], "x", box.x) & number(j["y"], "y", box.y) & number(j["w"], "w", box.w) &
         number(j["h"], "h", box.h);
  } else {
    out.add(field, "must be [x, y, w, h] or {x, y, w, h}");
    return std::nullopt;
  }
  if (!ok) return std::nullopt;
  try {
    validate(box);
  } catch (const DomainError& e) {
    out.add(field, e.what());
    return std::nullopt;
  }
  return box;
}

std::optional<ClusterColors> parse_clusters(const json& j, const std::string& field, Collector& out) {
  if (!j.is_array() || j.empty() || j.size() > kColorClusters) {
    out.add(field, "must be a list of 1 to 5 {rgb, weight} entries");
    return std::nullopt;
  }
  std::vector<ColorCluster> clusters;
  bool ok = true;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto at = field + "[" + std::to_string(i) + "]";
    const auto& c = j[i];
    if (!c.is_object() || !c.contains("rgb") || !c.contains("weight")) {
      out.add(at, "must be {rgb: [r, g, b], weight}");
      ok = false;
      continue;
    }
    const auto& rgb = c["rgb"];
    if (!rgb.is_array() || rgb.size() != 3 ||
        !std::all_of(rgb.begin(), rgb.end(),
                     [](const json& v) { return v.is_number() && v.get<double>() >= 0 && v.get<double>() <= 1; })) {
      out.add(at + ".rgb", "must be three numbers in [0,1]");
      ok = false;
      continue;
    }
    const auto& w = c["weight"];
    if (!w.is_number() || !(w.get<double>() >= 0) || !std::isfinite(w.get<double>())) {
      out.add(at + ".weight", "must be a non-negative number");
      ok = false;
      continue;
    }
    clusters.push_back({{rgb[0].get<double>(), rgb[1].get<double>(), rgb[2].get<double>()}, w.get<double>()});
  }
  if (!ok) return std::nullopt;
  double total = 0.0;
  for (const auto& c : clusters) total += c.weight;
  if (!(total > 0.0)) {
    out.add(field, "weights must not all be zero");
    return std::nullopt;
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const ColorCluster& a, const ColorCluster& b) { return a.weight > b.weight; });
  // Weights that already form a probability vector are kept bit-exact.
  const double scale = std::abs(total - 1.0) <= 1e-9 ? 1.0 : total;
  ClusterColors colors;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    colors.clusters[i] = clusters[i];
    colors.clusters[i].weight /= scale;
  }
  return colors;
}

std::optional<ColorFeature> parse_color(const json& j, const std::string& field, GraphVariant variant,
                                        Collector& out) {
  if (j.is_string()) {
    try {
      return simulator_color(j.get<std::string>(), variant);
    } catch (const DomainError& e) {
      out.add(field, e.what());
      return std::nullopt;
    }
  }
  if (j.is_object() && j.contains("clusters") && j.size() == 1) {
    auto clusters = parse_clusters(j["clusters"], field + ".clusters", out);
    if (!clusters) return std::nullopt;
    if (variant == GraphVariant::Cluster) return *clusters;
    return DiscreteColor{nearest_palette_color(clusters->clusters[0].center)};
  }
  out.add(field, "must be a palette name, \"#rrggbb\", or {clusters: [...]}");
  return std::nullopt;
}

}  // namespace

SceneRequestParse parse_scene_request(const json& j, GraphVariant model_variant) {
  Collector out;
  SceneRequestParse result;
  if (!j.is_object()) {
    result.errors.push_back({"", "request must be a JSON object"});
    return result;
  }
  static const std::vector<std::string> known = {"version", "entities", "time_of_day", "seed", "variant"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) out.add(key, "unknown field");
  }

  SceneRequest request;
  request.variant = model_variant;
  if (j.contains("version")) {
    const auto& v = j["version"];
    if (!v.is_number_integer() || v.get<std::int64_t>() != kSceneRequestVersion) {
      out.add("version", "unsupported version; expected " + std::to_string(kSceneRequestVersion));
    }
  }
  if (j.contains("variant")) {
    const auto& v = j["variant"];
    try {
      if (!v.is_string()) throw DomainError("must be \"cluster\" or \"discrete\"");
      const auto declared = parse_graph_variant(v.get<std::string>());
      if (declared != model_variant) {
        throw DomainError("the loaded model uses the " + std::string(to_string(model_variant)) + " variant");
      }
    } catch (const DomainError& e) {
      out.add("variant", e.what());
    }
  }
  if (j.contains("time_of_day")) {
    const auto& t = j["time_of_day"];
    try {
      if (!t.is_string()) throw DomainError("must be a string \"HH:MM\"");
      request.time_seconds = parse_time_of_day(t.get<std::string>());
    } catch (const DomainError& e) {
      out.add("time_of_day", e.what());
    }
  }
  if (j.contains("seed")) {
    const auto& s = j["seed"];
    if (s.is_number_unsigned()) {
      request.seed = s.get<std::uint64_t>();
    } else if (s.is_number_integer() && s.get<std::int64_t>() >= 0) {
      request.seed = static_cast<std::uint64_t>(s.get<std::int64_t>());
    } else {
      out.add("seed", "must be a non-negative integer");
    }
  }
  if (!j.contains("entities")) {
    out.add("entities", "is required (use [] for an empty scene)");
  } else if (!j["entities"].is_array()) {
    out.add("entities", "must be a list");
  } else {
    const auto& list = j["entities"];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto field = "entities[" + std::to_string(i) + "]";
      const auto& e = list[i];
      if (!e.is_object()) {
        out.add(field, "must be an object");
        continue;
      }
      for (const auto& [key, value] : e.items()) {
        if (key != "class" && key != "bbox" && key != "color") out.add(field + "." + key, "unknown field");
      }
      SceneEntity entity;
      bool ok = true;
      if (!e.contains("class") || !e["class"].is_string()) {
        out.add(field + ".class", "must be one of bus, truck, car, person");
        ok = false;
      } else {
        const auto name = e["class"].get<std::string>();
        try {
          entity.entity_class = parse_entity_class(name);
          if (entity.entity_class == EntityClass::Grid) throw DomainError("grid is not an entity class");
        } catch (const DomainError&) {
          out.add(field + ".class", "unknown class '" + name + "'; expected one of bus, truck, car, person");
          ok = false;
        }
      }
      if (!e.contains("bbox")) {
        out.add(field + ".bbox", "is required");
        ok = false;
      } else if (auto box = parse_bbox(e["bbox"], field + ".bbox", out)) {
        entity.bbox = *box;
      } else {
        ok = false;
      }
      if (!e.contains("color")) {
        out.add(field + ".color", "is required");
        ok = false;
      } else if (auto color = parse_color(e["color"], field + ".color", model_variant, out)) {
        entity.color = *color;
      } else {
        ok = false;
      }
      if (ok) request.entities.push_back(entity);
    }
  }
  result.errors = std::move(out.errors);
  if (result.errors.empty()) result.request = std::move(request);
  return result;
}

std::string format_time_of_day(double seconds) {
  const auto minutes = static_cast<int>(std::floor(seconds / 60.0));
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d:%02d", (minutes / 60) % 24, minutes % 60);
  return buf;
}

json to_json(const SceneRequest& request) {
  json entities = json::array();
  for (const auto& e : request.entities) {
    json color;
    if (const auto* d = std::get_if<DiscreteColor>(&e.color)) {
      color = std::string(to_string(d->color));
    } else {
      json clusters = json::array();
      for (const auto& c : std::get<ClusterColors>(e.color).clusters) {
        if (c.weight > 0) clusters.push_back({{"rgb", {c.center.r, c.center.g, c.center.b}}, {"weight", c.weight}});
      }
      color = {{"clusters", clusters}};
    }
    entities.push_back({{"class", std::string(to_string(e.entity_class))},
                        {"bbox", {e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h}},
                        {"color", color}});
  }
  json j = {{"version", kSceneRequestVersion},
            {"entities", entities},
            {"time_of_day", format_time_of_day(request.time_seconds)},
            {"seed", request.seed},
            {"variant", std::string(to_string(request.variant))}};
  return j;
}

json to_json(const FieldError& error) { return {{"field", error.field}, {"message", error.message}}; }

json field_errors_json(const std::vector<FieldError>& errors) {
  json list = json::array();
  for (const auto& e : errors) list.push_back(to_json(e));
  return {{"errors", list}};
}

json palette_json() {
  json list = json::array();
  for (const auto c : palette()) {
    const auto rgb = palette_rgb(c);
    const auto byte = [](double v) { return static_cast<int>(std::lround(v * 255.0)); };
    char hex[8];
    std::snprintf(hex, sizeof hex, "#%02x%02x%02x", byte(rgb.r), byte(rgb.g), byte(rgb.b));
    list.push_back({{"name", std::string(to_string(c))}, {"rgb", {byte(rgb.r), byte(rgb.g), byte(rgb.b)}}, {"hex", hex}});
  }
  return list;
}

}  // namespace sgsynth
