// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Scene entities and their node-feature building blocks.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sgsynth {

/// Node class. The order is the order of the one-hot class slots.
enum class EntityClass : std::uint8_t { Bus = 0, Truck, Car, Person, Grid };

inline constexpr int kClassSlots = 5;
inline constexpr std::array<EntityClass, 4> kEntityClasses = {EntityClass::Bus, EntityClass::Truck,
                                                              EntityClass::Car, EntityClass::Person};

std::string_view to_string(EntityClass c);
/// Accepts "bus", "truck", "car", "person", "grid".
EntityClass parse_entity_class(std::string_view name);

/// Segmentation label of a class: 0 is background, then bus, truck, car, person.
int segmentation_label(EntityClass c);

/// Normalized box, center + extent, everything in [0,1].
struct BBox {
  double x = 0.5;
  double y = 0.5;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const BBox&) const = default;
};

/// Throws DomainError unless all fields are in [0,1] and w, h > 0.
void validate(const BBox& box);

struct TimeEncoding {
  double sin_component = 0.0;
  double cos_component = 1.0;

  bool operator==(const TimeEncoding&) const = default;
};

inline constexpr double kSecondsPerDay = 86400.0;

/// Maps seconds since midnight onto the unit circle. Input must be in [0, 86400).
TimeEncoding encode_time(double seconds_since_midnight);

/// Parses "HH:MM" (or "HH:MM:SS") into seconds since midnight.
double parse_time_of_day(std::string_view hhmm);

/// RGB with channels in [0,1].
struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  bool operator==(const Rgb&) const = default;
  auto operator<=>(const Rgb&) const = default;
};

inline Rgb from_bytes(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return {r / 255.0, g / 255.0, b / 255.0};
}

enum class PaletteColor : std::uint8_t { Black = 0, White, Red, Lime, Blue, Yellow, Magenta, Gray };

inline constexpr int kPaletteSize = 8;
inline constexpr int kColorClusters = 5;

std::string_view to_string(PaletteColor c);
/// Throws DomainError naming the palette when the name is unknown.
PaletteColor parse_palette_color(std::string_view name);
Rgb palette_rgb(PaletteColor c);
std::span<const PaletteColor> palette();

struct ColorCluster {
  Rgb center;
  double weight = 0.0;

  bool operator==(const ColorCluster&) const = default;
};

/// Five dominant colors ordered by descending pixel count; weights are a softmax.
struct ClusterColors {
  std::array<ColorCluster, kColorClusters> clusters{};

  bool operator==(const ClusterColors&) const = default;
};

struct DiscreteColor {
  PaletteColor color = PaletteColor::Black;

  bool operator==(const DiscreteColor&) const = default;
};

using ColorFeature = std::variant<ClusterColors, DiscreteColor>;

enum class GraphVariant : std::uint8_t { Cluster, Discrete };

std::string_view to_string(GraphVariant v);
GraphVariant parse_graph_variant(std::string_view name);

GraphVariant variant_of(const ColorFeature& color);

/// 20 slots for clusters (r,g,b,weight per cluster) or an 8-slot one-hot.
int color_width(GraphVariant v);
std::vector<double> color_slots(const ColorFeature& color);

/// Cluster feature for a flat color: the color itself plus four zero-padded clusters.
ClusterColors single_color_clusters(const Rgb& rgb);

struct SceneEntity {
  EntityClass entity_class = EntityClass::Car;
  BBox bbox;
  ColorFeature color = DiscreteColor{};
};

/// Throws DomainError for grid-class entities or invalid boxes.
void validate(const SceneEntity& entity);

}  // namespace sgsynth
