// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference computations used by the unit and acceptance suites.
// These deliberately avoid the library's own helpers.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace sgsynth::testing {

inline std::vector<double> softmax(const std::vector<double>& xs) {
  double total = 0.0;
  for (double x : xs) total += std::exp(x);
  std::vector<double> out;
  for (double x : xs) out.push_back(std::exp(x) / total);
  return out;
}

/// Grid cells (row-major index) within `hops` grid spacings of (cx, cy), by
/// checking every node of a rows x cols lattice spanning [0,1]^2.
inline std::set<int> radius_oracle(int rows, int cols, int hops, double cx, double cy) {
  const double sx = 1.0 / (cols - 1);
  const double sy = 1.0 / (rows - 1);
  const double radius = hops * (sx > sy ? sx : sy);
  std::set<int> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (std::hypot(c * sx - cx, r * sy - cy) <= radius) out.insert(r * cols + c);
    }
  }
  return out;
}

/// Undirected 4-neighbor links of a rows x cols grid by pairwise enumeration.
inline int four_neighbor_links(int rows, int cols) {
  int links = 0;
  const int n = rows * cols;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int dr = std::abs(a / cols - b / cols);
      const int dc = std::abs(a % cols - b % cols);
      if (dr + dc == 1) ++links;
    }
  }
  return links;
}

struct OracleBox {
  int label;       // 1..4
  int order;       // emission order
  double x, y, w, h;
};

/// Per-pixel class of the latest (highest order) box covering the pixel center.
inline std::vector<int> raster_oracle(const std::vector<OracleBox>& boxes, int height, int width) {
  std::vector<int> out(static_cast<std::size_t>(height * width), 0);
  for (int py = 0; py < height; ++py) {
    for (int px = 0; px < width; ++px) {
      const double u = (px + 0.5) / width;
      const double v = (py + 0.5) / height;
      int best_order = -1;
      for (const auto& b : boxes) {
        const bool inside = u >= b.x - b.w / 2 && u < b.x + b.w / 2 && v >= b.y - b.h / 2 && v < b.y + b.h / 2;
        if (inside && b.order > best_order) {
          best_order = b.order;
          out[static_cast<std::size_t>(py * width + px)] = b.label;
        }
      }
    }
  }
  return out;
}

}  // namespace sgsynth::testing
