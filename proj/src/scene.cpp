// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/scene.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

constexpr std::array<std::string_view, kClassSlots> kClassNames = {"bus", "truck", "car", "person", "grid"};

constexpr std::array<std::string_view, kPaletteSize> kPaletteNames = {
    "black", "white", "red", "lime", "blue", "yellow", "magenta", "gray"};

constexpr std::array<PaletteColor, kPaletteSize> kPalette = {
    PaletteColor::Black, PaletteColor::White,  PaletteColor::Red,     PaletteColor::Lime,
    PaletteColor::Blue,  PaletteColor::Yellow, PaletteColor::Magenta, PaletteColor::Gray};

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

int parse_int(std::string_view s, std::string_view what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw DomainError("invalid " + std::string(what) + " in time of day: '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(EntityClass c) { return kClassNames.at(static_cast<std::size_t>(c)); }

EntityClass parse_entity_class(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<EntityClass>(i);
  }
  throw DomainError("unknown entity class '" + std::string(name) +
                    "' (expected one of bus, truck, car, person, grid)");
}

int segmentation_label(EntityClass c) {
  if (c == EntityClass::Grid) throw DomainError("grid nodes have no segmentation label");
  return static_cast<int>(c) + 1;
}

void validate(const BBox& box) {
  if (!in_unit(box.x) || !in_unit(box.y) || !in_unit(box.w) || !in_unit(box.h)) {
    throw DomainError("bbox fields must lie in [0,1]");
  }
  if (!(box.w > 0.0) || !(box.h > 0.0)) throw DomainError("bbox width and height must be positive");
}

TimeEncoding encode_time(double seconds_since_midnight) {
  if (!(seconds_since_midnight >= 0.0 && seconds_since_midnight < kSecondsPerDay)) {
    throw DomainError("seconds since midnight must lie in [0, 86400), got " +
                      std::to_string(seconds_since_midnight));
  }
  const double theta = 2.0 * std::numbers::pi * seconds_since_midnight / kSecondsPerDay;
  return {std::sin(theta), std::cos(theta)};
}

double parse_time_of_day(std::string_view text) {
  const auto first = text.find(':');
  if (first == std::string_view::npos) {
    throw DomainError("time of day must be HH:MM, got '" + std::string(text) + "'");
  }
  const int hours = parse_int(text.substr(0, first), "hours");
  auto rest = text.substr(first + 1);
  int seconds = 0;
  const auto second = rest.find(':');
  if (second != std::string_view::npos) {
    seconds = parse_int(rest.substr(second + 1), "seconds");
    rest = rest.substr(0, second);
  }
  const int minutes = parse_int(rest, "minutes");
  if (hours < 0 || hours > 23 || minutes < 0 || minutes > 59 || seconds < 0 || seconds > 59) {
    throw DomainError("time of day out of range: '" + std::string(text) + "'");
  }
  return hours * 3600.0 + minutes * 60.0 + seconds;
}

std::string_view to_string(PaletteColor c) { return kPaletteNames.at(static_cast<std::size_t>(c)); }

PaletteColor parse_palette_color(std::string_view name) {
  for (std::size_t i = 0; i < kPaletteNames.size(); ++i) {
    if (kPaletteNames[i] == name) return static_cast<PaletteColor>(i);
  }
  throw DomainError("unknown color '" + std::string(name) +
                    "'; palette is black, white, red, lime, blue, yellow, magenta, gray");
}

Rgb palette_rgb(PaletteColor c) {
  switch (c) {
    case PaletteColor::Black: return from_bytes(0, 0, 0);
    case PaletteColor::White: return from_bytes(255, 255, 255);
    case PaletteColor::Red: return from_bytes(255, 0, 0);
    case PaletteColor::Lime: return from_bytes(0, 255, 0);
    case PaletteColor::Blue: return from_bytes(0, 0, 255);
    case PaletteColor::Yellow: return from_bytes(255, 255, 0);
    case PaletteColor::Magenta: return from_bytes(255, 0, 255);
    case PaletteColor::Gray: return from_bytes(128, 128, 128);
  }
  throw DomainError("invalid palette color");
}

std::span<const PaletteColor> palette() { return kPalette; }

std::string_view to_string(GraphVariant v) { return v == GraphVariant::Cluster ? "cluster" : "discrete"; }

GraphVariant parse_graph_variant(std::string_view name) {
  if (name == "cluster") return GraphVariant::Cluster;
  if (name == "discrete") return GraphVariant::Discrete;
  throw DomainError("unknown graph variant '" + std::string(name) + "' (expected cluster or discrete)");
}

GraphVariant variant_of(const ColorFeature& color) {
  return std::holds_alternative<ClusterColors>(color) ? GraphVariant::Cluster : GraphVariant::Discrete;
}

int color_width(GraphVariant v) { return v == GraphVariant::Cluster ? 4 * kColorClusters : kPaletteSize; }

std::vector<double> color_slots(const ColorFeature& color) {
  std::vector<double> slots;
  if (const auto* clusters = std::get_if<ClusterColors>(&color)) {
    slots.reserve(4 * kColorClusters);
    for (const auto& c : clusters->clusters) {
      slots.insert(slots.end(), {c.center.r, c.center.g, c.center.b, c.weight});
    }
  } else {
    slots.assign(kPaletteSize, 0.0);
    slots[static_cast<std::size_t>(std::get<DiscreteColor>(color).color)] = 1.0;
  }
  return slots;
}

ClusterColors single_color_clusters(const Rgb& rgb) {
  // softmax([1, 0, 0, 0, 0])
  const double denom = std::exp(1.0) + (kColorClusters - 1);
  ClusterColors out;
  out.clusters[0] = {rgb, std::exp(1.0) / denom};
  for (int i = 1; i < kColorClusters; ++i) out.clusters[static_cast<std::size_t>(i)] = {{}, 1.0 / denom};
  return out;
}

void validate(const SceneEntity& entity) {
  if (entity.entity_class == EntityClass::Grid) throw DomainError("scene entities cannot have class grid");
  validate(entity.bbox);
  if (const auto* clusters = std::get_if<ClusterColors>(&entity.color)) {
    double total = 0.0;
    for (const auto& c : clusters->clusters) {
      if (c.weight < 0.0) throw DomainError("cluster weights must be nonnegative");
      if (!in_unit(c.center.r) || !in_unit(c.center.g) || !in_unit(c.center.b)) {
        throw DomainError("cluster centers must lie in [0,1]^3");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-6) throw DomainError("cluster weights must sum to 1");
  }
}

}  // namespace sgsynth
