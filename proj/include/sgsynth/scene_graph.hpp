// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Lattice + entity graphs and their node features.
//
// Feature layout per node: bbox (x, y, w, h) | class one-hot (bus, truck, car,
// person, grid) | time (sin, cos) | color (20 cluster slots or 8 palette slots).

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sgsynth/scene.hpp"

namespace sgsynth {

struct LatticeSpec {
  int rows = 20;
  int cols = 20;
  int connect_radius_hops = 1;

  bool operator==(const LatticeSpec&) const = default;

  /// Distance between horizontally / vertically adjacent grid nodes.
  double col_spacing() const { return 1.0 / (cols - 1); }
  double row_spacing() const { return 1.0 / (rows - 1); }
  /// Euclidean entity-to-grid connection radius in normalized coordinates.
  double connect_radius() const;
};

void validate(const LatticeSpec& spec);

namespace feature {
inline constexpr int kBBox = 0;
inline constexpr int kClass = 4;
inline constexpr int kTime = 9;
inline constexpr int kColor = 11;
}  // namespace feature

int feature_width(GraphVariant v);

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

struct Edge {
  int src = 0;
  int dst = 0;

  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

class SceneGraph {
 public:
  SceneGraph() = default;
  SceneGraph(GraphVariant variant, LatticeSpec lattice);

  GraphVariant variant() const { return variant_; }
  const LatticeSpec& lattice() const { return lattice_; }
  int feature_width() const { return width_; }
  int node_count() const { return static_cast<int>(kinds_.size()); }
  int grid_node_count() const { return lattice_.rows * lattice_.cols; }

  std::span<const double> features(int node) const;
  std::span<double> features(int node);
  /// Row-major node_count() x feature_width() matrix.
  const std::vector<double>& feature_matrix() const { return features_; }

  EntityClass kind(int node) const { return kinds_.at(static_cast<std::size_t>(node)); }
  const std::vector<EntityClass>& kinds() const { return kinds_; }
  Point2 position(int node) const { return positions_.at(static_cast<std::size_t>(node)); }
  const std::vector<Point2>& positions() const { return positions_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Node index of grid cell (row, col).
  int lattice_node(int row, int col) const;
  const std::vector<int>& lattice_index() const { return lattice_index_; }

  int add_node(EntityClass kind, Point2 position, std::span<const double> features);
  void add_edge(int src, int dst);
  void set_lattice_node(int row, int col, int node);

  bool operator==(const SceneGraph&) const = default;

 private:
  GraphVariant variant_ = GraphVariant::Discrete;
  LatticeSpec lattice_;
  int width_ = 0;
  std::vector<double> features_;
  std::vector<EntityClass> kinds_;
  std::vector<Point2> positions_;
  std::vector<Edge> edges_;
  std::vector<int> lattice_index_;
};

/// Grid-only graph with 4-neighborhood links stored as two directed edges.
/// Time and color slots are zero.
SceneGraph build_lattice(const LatticeSpec& spec, GraphVariant variant = GraphVariant::Discrete);

/// Grid nodes within the connection radius of `center`, in row-major order.
std::vector<int> grid_neighbors(const LatticeSpec& spec, Point2 center);

/// Lattice plus one node per entity (appended in input order), each entity linked
/// both ways to every grid node within the connection radius of its box center.
/// Every node carries `time` in its time slots.
SceneGraph build_scene_graph(std::span<const SceneEntity> entities, const TimeEncoding& time,
                             const LatticeSpec& spec, GraphVariant variant);

nlohmann::json to_json(const SceneGraph& graph);
SceneGraph scene_graph_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LatticeSpec& spec);
LatticeSpec lattice_spec_from_json(const nlohmann::json& j);

}  // namespace sgsynth
