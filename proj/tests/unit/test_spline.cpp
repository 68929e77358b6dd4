// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sgsynth/error.hpp"
#include "sgsynth/spline.hpp"

using namespace sgsynth;

TEST_CASE("collinear control points give a straight segment") {
  const std::vector<Point2> pts = {{0.1, 0.2}, {0.25, 0.35}, {0.6, 0.7}, {0.8, 0.9}};
  const auto s = fit_lane_spline(pts, "straight");
  CHECK(std::abs(s.length() - std::hypot(0.7, 0.7)) < 1e-6);
  for (double u = 0.0; u <= 1.0; u += 0.05) {
    const auto p = s.at_normalized_arclength(u);
    CHECK(std::abs((p.y - 0.2) - (p.x - 0.1)) < 1e-9);
    CHECK(std::abs(std::hypot(p.x - 0.1, p.y - 0.2) - u * s.length()) < 1e-6);
  }
}

TEST_CASE("spline interpolates its control points exactly") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point2> pts;
    for (int i = 0; i < 4 + trial % 5; ++i) pts.push_back({u(rng), u(rng)});
    const auto s = fit_lane_spline(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto p = s.at(s.knots()[i]);
      CHECK(std::abs(p.x - pts[i].x) <= 1e-9);
      CHECK(std::abs(p.y - pts[i].y) <= 1e-9);
    }
    // Arclength strictly increasing along the parameter.
    double prev = -1.0;
    for (int k = 0; k <= 100; ++k) {
      const double a = s.arclength_at(s.parameter_end() * k / 100.0);
      CHECK(a > prev);
      prev = a;
    }
  }
}

TEST_CASE("quarter circle arclength is close to pi/2") {
  std::vector<Point2> pts;
  for (int i = 0; i < 8; ++i) {
    const double a = 0.5 * std::numbers::pi * i / 7.0;
    pts.push_back({std::cos(a), std::sin(a)});
  }
  const auto s = fit_lane_spline(pts);
  CHECK(std::abs(s.length() - std::numbers::pi / 2) / (std::numbers::pi / 2) < 0.01);
}

TEST_CASE("arclength table matches dense polyline integration") {
  const std::vector<Point2> pts = {{0.0, 0.0}, {0.3, 0.5}, {0.5, 0.2}, {0.9, 0.8}, {1.0, 0.1}};
  const auto s = fit_lane_spline(pts);
  // Oracle: chord sum over a very fine parameter sampling.
  double dense = 0.0;
  Point2 prev = s.at(0.0);
  const int n = 200000;
  for (int i = 1; i <= n; ++i) {
    const auto p = s.at(s.parameter_end() * i / n);
    dense += std::hypot(p.x - prev.x, p.y - prev.y);
    prev = p;
  }
  CHECK(std::abs(s.length() - dense) / dense < 1e-3);
  // Inverse lookup is consistent.
  for (double frac : {0.1, 0.37, 0.5, 0.92}) {
    const double t = s.parameter_at_arclength(frac * s.length());
    CHECK(std::abs(s.arclength_at(t) - frac * s.length()) < 1e-9);
  }
}

TEST_CASE("spline input validation") {
  const std::vector<Point2> three = {{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS_AS(fit_lane_spline(three), DomainError);
  const std::vector<Point2> dup = {{0, 0}, {1, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS_AS(fit_lane_spline(dup), DomainError);
}
