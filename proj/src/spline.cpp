// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

// Sub-intervals per spline segment in the arclength table.
constexpr int kTableSubdivisions = 32;

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGaussNodes = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                               0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                 0.2369268850561891, 0.2369268850561891};

// Second derivatives of the natural cubic spline through (t_i, y_i).
std::vector<double> natural_second_derivatives(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  // Tridiagonal system for interior m_1..m_{n-2}, Thomas algorithm.
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t[i] - t[i - 1];
    const double h1 = t[i + 1] - t[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double lower = t[i + 1] - t[i];  // h_i, symmetric with upper[i-1]
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> inner(k);
  inner[k - 1] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) inner[i] = (rhs[i] - upper[i] * inner[i + 1]) / diag[i];
  std::copy(inner.begin(), inner.end(), m.begin() + 1);
  return m;
}

double eval_cubic(double t0, double t1, double y0, double y1, double m0, double m1, double t) {
  const double h = t1 - t0;
  const double a = (t1 - t) / h;
  const double b = (t - t0) / h;
  return a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
}

double eval_cubic_derivative(double t0, double t1, double y0, double y1, double m0, double m1, double t) {
  const double h = t1 - t0;
  const double a = (t1 - t) / h;
  const double b = (t - t0) / h;
  return (y1 - y0) / h + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
}

}  // namespace

LaneSpline::LaneSpline(std::span<const Point2> control_points, std::string lane_id)
    : lane_id_(std::move(lane_id)), points_(control_points.begin(), control_points.end()) {
  if (points_.size() < 4) throw DomainError("a lane spline needs at least 4 control points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    for (std::size_t j = i + 1; j < points_.size(); ++j) {
      if (points_[i] == points_[j]) throw DomainError("lane spline control points must be distinct");
    }
  }

  knots_.assign(points_.size(), 0.0);
  std::vector<double> xs(points_.size()), ys(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    xs[i] = points_[i].x;
    ys[i] = points_[i].y;
    if (i > 0) {
      knots_[i] = knots_[i - 1] + std::hypot(points_[i].x - points_[i - 1].x, points_[i].y - points_[i - 1].y);
    }
  }
  mx_ = natural_second_derivatives(knots_, xs);
  my_ = natural_second_derivatives(knots_, ys);

  table_t_.push_back(0.0);
  table_s_.push_back(0.0);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    const double step = (knots_[i + 1] - knots_[i]) / kTableSubdivisions;
    for (int j = 1; j <= kTableSubdivisions; ++j) {
      const double t1 = j == kTableSubdivisions ? knots_[i + 1] : knots_[i] + j * step;
      table_s_.push_back(table_s_.back() + integrate(table_t_.back(), t1));
      table_t_.push_back(t1);
    }
  }
  for (std::size_t i = 1; i < table_s_.size(); ++i) {
    if (!(table_s_[i] > table_s_[i - 1])) throw DomainError("lane spline arclength is not strictly increasing");
  }
}

std::size_t LaneSpline::segment(double t) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - knots_.begin())) - 1;
  return std::min(idx, knots_.size() - 2);
}

Point2 LaneSpline::at(double t) const {
  const auto i = segment(t);
  return {eval_cubic(knots_[i], knots_[i + 1], points_[i].x, points_[i + 1].x, mx_[i], mx_[i + 1], t),
          eval_cubic(knots_[i], knots_[i + 1], points_[i].y, points_[i + 1].y, my_[i], my_[i + 1], t)};
}

Point2 LaneSpline::derivative(double t) const {
  const auto i = segment(t);
  return {eval_cubic_derivative(knots_[i], knots_[i + 1], points_[i].x, points_[i + 1].x, mx_[i], mx_[i + 1], t),
          eval_cubic_derivative(knots_[i], knots_[i + 1], points_[i].y, points_[i + 1].y, my_[i], my_[i + 1], t)};
}

double LaneSpline::speed(double t) const {
  const auto d = derivative(t);
  return std::hypot(d.x, d.y);
}

double LaneSpline::integrate(double a, double b) const {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double total = 0.0;
  for (std::size_t i = 0; i < kGaussNodes.size(); ++i) total += kGaussWeights[i] * speed(mid + half * kGaussNodes[i]);
  return total * half;
}

double LaneSpline::arclength_at(double t) const {
  t = std::clamp(t, 0.0, parameter_end());
  const auto it = std::upper_bound(table_t_.begin(), table_t_.end(), t);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - table_t_.begin())) - 1;
  if (i + 1 >= table_t_.size()) return table_s_.back();
  return table_s_[i] + integrate(table_t_[i], t);
}

double LaneSpline::parameter_at_arclength(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= length()) return parameter_end();
  const auto it = std::upper_bound(table_s_.begin(), table_s_.end(), s);
  const auto i = static_cast<std::size_t>(it - table_s_.begin()) - 1;
  double lo = table_t_[i];
  double hi = table_t_[i + 1];
  // Newton from the linear guess, safeguarded by bisection.
  double t = lo + (hi - lo) * (s - table_s_[i]) / (table_s_[i + 1] - table_s_[i]);
  for (int iter = 0; iter < 50; ++iter) {
    const double f = table_s_[i] + integrate(table_t_[i], t) - s;
    if (std::abs(f) < 1e-13 * std::max(1.0, length())) break;
    if (f > 0) {
      hi = t;
    } else {
      lo = t;
    }
    const double v = speed(t);
    double next = v > 0 ? t - f / v : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    t = next;
  }
  return t;
}

Point2 LaneSpline::at_normalized_arclength(double u) const {
  if (u <= 0.0) return points_.front();
  if (u >= 1.0) return points_.back();
  return at(parameter_at_arclength(u * length()));
}

std::vector<double> LaneSpline::control_point_arclengths() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    out.push_back(table_s_[i * kTableSubdivisions] / length());
  }
  return out;
}

LaneSpline fit_lane_spline(std::span<const Point2> points, std::string lane_id) {
  return LaneSpline(points, std::move(lane_id));
}

}  // namespace sgsynth
