// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/scene_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgsynth/error.hpp"

namespace sgsynth {

using nlohmann::json;

double LatticeSpec::connect_radius() const {
  return connect_radius_hops * std::max(col_spacing(), row_spacing());
}

void validate(const LatticeSpec& spec) {
  if (spec.rows < 2 || spec.cols < 2) {
    throw DomainError("lattice needs at least 2 rows and 2 cols, got " + std::to_string(spec.rows) + "x" +
                      std::to_string(spec.cols));
  }
  if (spec.connect_radius_hops < 1) throw DomainError("connection radius must be at least one grid hop");
}

int feature_width(GraphVariant v) { return feature::kColor + color_width(v); }

SceneGraph::SceneGraph(GraphVariant variant, LatticeSpec lattice)
    : variant_(variant),
      lattice_(lattice),
      width_(sgsynth::feature_width(variant)),
      lattice_index_(static_cast<std::size_t>(lattice.rows * lattice.cols), -1) {}

std::span<const double> SceneGraph::features(int node) const {
  if (node < 0 || node >= node_count()) throw DomainError("node index out of range");
  return {features_.data() + static_cast<std::size_t>(node) * width_, static_cast<std::size_t>(width_)};
}

std::span<double> SceneGraph::features(int node) {
  if (node < 0 || node >= node_count()) throw DomainError("node index out of range");
  return {features_.data() + static_cast<std::size_t>(node) * width_, static_cast<std::size_t>(width_)};
}

int SceneGraph::lattice_node(int row, int col) const {
  if (row < 0 || row >= lattice_.rows || col < 0 || col >= lattice_.cols) {
    throw DomainError("lattice cell out of range");
  }
  return lattice_index_[static_cast<std::size_t>(row * lattice_.cols + col)];
}

int SceneGraph::add_node(EntityClass kind, Point2 position, std::span<const double> features) {
  if (static_cast<int>(features.size()) != width_) {
    throw DomainError("node feature width " + std::to_string(features.size()) + " does not match graph width " +
                      std::to_string(width_));
  }
  features_.insert(features_.end(), features.begin(), features.end());
  kinds_.push_back(kind);
  positions_.push_back(position);
  return node_count() - 1;
}

void SceneGraph::add_edge(int src, int dst) {
  if (src < 0 || src >= node_count() || dst < 0 || dst >= node_count()) {
    throw DomainError("edge endpoint out of range");
  }
  edges_.push_back({src, dst});
}

void SceneGraph::set_lattice_node(int row, int col, int node) {
  if (row < 0 || row >= lattice_.rows || col < 0 || col >= lattice_.cols) {
    throw DomainError("lattice cell out of range");
  }
  if (node < 0 || node >= node_count() || kind(node) != EntityClass::Grid) {
    throw DomainError("lattice cells must map to grid nodes");
  }
  lattice_index_[static_cast<std::size_t>(row * lattice_.cols + col)] = node;
}

SceneGraph build_lattice(const LatticeSpec& spec, GraphVariant variant) {
  validate(spec);
  SceneGraph graph(variant, spec);
  std::vector<double> row(static_cast<std::size_t>(graph.feature_width()), 0.0);
  const double dx = spec.col_spacing();
  const double dy = spec.row_spacing();

  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const Point2 p{c * dx, r * dy};
      std::fill(row.begin(), row.end(), 0.0);
      row[feature::kBBox + 0] = p.x;
      row[feature::kBBox + 1] = p.y;
      row[feature::kBBox + 2] = dx;
      row[feature::kBBox + 3] = dy;
      row[feature::kClass + static_cast<int>(EntityClass::Grid)] = 1.0;
      graph.set_lattice_node(r, c, graph.add_node(EntityClass::Grid, p, row));
    }
  }
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const int here = graph.lattice_node(r, c);
      if (c + 1 < spec.cols) {
        const int right = graph.lattice_node(r, c + 1);
        graph.add_edge(here, right);
        graph.add_edge(right, here);
      }
      if (r + 1 < spec.rows) {
        const int down = graph.lattice_node(r + 1, c);
        graph.add_edge(here, down);
        graph.add_edge(down, here);
      }
    }
  }
  return graph;
}

std::vector<int> grid_neighbors(const LatticeSpec& spec, Point2 center) {
  const double radius = spec.connect_radius();
  const double dx = spec.col_spacing();
  const double dy = spec.row_spacing();
  const int c0 = std::max(0, static_cast<int>(std::floor((center.x - radius) / dx)));
  const int c1 = std::min(spec.cols - 1, static_cast<int>(std::ceil((center.x + radius) / dx)));
  const int r0 = std::max(0, static_cast<int>(std::floor((center.y - radius) / dy)));
  const int r1 = std::min(spec.rows - 1, static_cast<int>(std::ceil((center.y + radius) / dy)));

  std::vector<int> out;
  const double limit = radius * radius + 1e-12;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double ex = c * dx - center.x;
      const double ey = r * dy - center.y;
      if (ex * ex + ey * ey <= limit) out.push_back(r * spec.cols + c);
    }
  }
  return out;
}

SceneGraph build_scene_graph(std::span<const SceneEntity> entities, const TimeEncoding& time,
                             const LatticeSpec& spec, GraphVariant variant) {
  for (const auto& e : entities) {
    validate(e);
    if (variant_of(e.color) != variant) {
      throw DomainError("entity color feature does not match the " + std::string(to_string(variant)) +
                        " graph variant");
    }
  }

  SceneGraph graph = build_lattice(spec, variant);
  for (int n = 0; n < graph.node_count(); ++n) {
    auto f = graph.features(n);
    f[feature::kTime] = time.sin_component;
    f[feature::kTime + 1] = time.cos_component;
  }

  std::vector<double> row(static_cast<std::size_t>(graph.feature_width()), 0.0);
  for (const auto& e : entities) {
    std::fill(row.begin(), row.end(), 0.0);
    row[feature::kBBox + 0] = e.bbox.x;
    row[feature::kBBox + 1] = e.bbox.y;
    row[feature::kBBox + 2] = e.bbox.w;
    row[feature::kBBox + 3] = e.bbox.h;
    row[feature::kClass + static_cast<int>(e.entity_class)] = 1.0;
    row[feature::kTime] = time.sin_component;
    row[feature::kTime + 1] = time.cos_component;
    const auto color = color_slots(e.color);
    std::copy(color.begin(), color.end(), row.begin() + feature::kColor);

    const Point2 center{e.bbox.x, e.bbox.y};
    const int node = graph.add_node(e.entity_class, center, row);
    for (int cell : grid_neighbors(spec, center)) {
      const int grid = graph.lattice_index()[static_cast<std::size_t>(cell)];
      graph.add_edge(node, grid);
      graph.add_edge(grid, node);
    }
  }
  return graph;
}

json to_json(const LatticeSpec& spec) {
  return {{"rows", spec.rows}, {"cols", spec.cols}, {"radius", spec.connect_radius_hops}};
}

LatticeSpec lattice_spec_from_json(const json& j) {
  LatticeSpec spec;
  spec.rows = j.at("rows").get<int>();
  spec.cols = j.at("cols").get<int>();
  spec.connect_radius_hops = j.value("radius", 1);
  validate(spec);
  return spec;
}

json to_json(const SceneGraph& graph) {
  json nodes = json::array();
  for (int n = 0; n < graph.node_count(); ++n) {
    const auto f = graph.features(n);
    const auto p = graph.position(n);
    nodes.push_back({{"kind", to_string(graph.kind(n))},
                     {"position", {p.x, p.y}},
                     {"features", std::vector<double>(f.begin(), f.end())}});
  }
  json edges = json::array();
  for (const auto& e : graph.edges()) edges.push_back({e.src, e.dst});
  return {{"variant", to_string(graph.variant())},
          {"lattice", to_json(graph.lattice())},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

SceneGraph scene_graph_from_json(const json& j) {
  try {
    const auto variant = parse_graph_variant(j.at("variant").get<std::string>());
    const auto spec = lattice_spec_from_json(j.at("lattice"));
    SceneGraph graph(variant, spec);

    for (const auto& node : j.at("nodes")) {
      const auto kind = parse_entity_class(node.at("kind").get<std::string>());
      const auto& pos = node.at("position");
      const Point2 p{pos.at(0).get<double>(), pos.at(1).get<double>()};
      const auto features = node.at("features").get<std::vector<double>>();
      const int index = graph.add_node(kind, p, features);
      if (kind == EntityClass::Grid) {
        const int col = static_cast<int>(std::lround(p.x / spec.col_spacing()));
        const int row = static_cast<int>(std::lround(p.y / spec.row_spacing()));
        if (graph.lattice_node(row, col) != -1) throw DomainError("duplicate grid node position");
        graph.set_lattice_node(row, col, index);
      }
    }
    for (int r = 0; r < spec.rows; ++r) {
      for (int c = 0; c < spec.cols; ++c) {
        if (graph.lattice_node(r, c) < 0) throw DomainError("graph is missing lattice nodes");
      }
    }
    for (const auto& e : j.at("edges")) graph.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
    return graph;
  } catch (const json::exception& ex) {
    throw DomainError(std::string("malformed scene graph JSON: ") + ex.what());
  }
}

}  // namespace sgsynth
