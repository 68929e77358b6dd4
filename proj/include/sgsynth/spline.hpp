// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "sgsynth/scene_graph.hpp"

namespace sgsynth {

/// Planar natural cubic spline through image points, parameterized by cumulative
/// chord length, with an arclength lookup table.
class LaneSpline {
 public:
  /// Needs at least 4 pairwise distinct points; throws DomainError otherwise.
  explicit LaneSpline(std::span<const Point2> control_points, std::string lane_id = {});

  const std::string& lane_id() const { return lane_id_; }
  const std::vector<Point2>& control_points() const { return points_; }
  /// Spline parameter of each control point.
  const std::vector<double>& knots() const { return knots_; }

  double parameter_end() const { return knots_.back(); }
  Point2 at(double t) const;
  Point2 derivative(double t) const;

  double length() const { return table_s_.back(); }
  /// Arclength from the first control point to parameter t.
  double arclength_at(double t) const;
  /// Parameter where the arclength from the start equals s (clamped to [0, length()]).
  double parameter_at_arclength(double s) const;
  /// Point at fraction u in [0,1] of the total arclength.
  Point2 at_normalized_arclength(double u) const;
  /// Normalized arclength of every control point.
  std::vector<double> control_point_arclengths() const;

 private:
  std::size_t segment(double t) const;
  double speed(double t) const;
  double integrate(double a, double b) const;

  std::string lane_id_;
  std::vector<Point2> points_;
  std::vector<double> knots_;
  std::vector<double> mx_;  // second derivatives at knots
  std::vector<double> my_;
  std::vector<double> table_t_;
  std::vector<double> table_s_;
};

LaneSpline fit_lane_spline(std::span<const Point2> points, std::string lane_id = {});

}  // namespace sgsynth
