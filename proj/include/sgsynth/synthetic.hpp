// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Procedural junction frames for smoke tests and demos: a road backdrop whose
// brightness follows the time of day, with solid-colored entity boxes.

#pragma once

#include <cstdint>
#include <vector>

#include "sgsynth/dataset.hpp"

namespace sgsynth {

struct SyntheticOptions {
  int count = 20;
  int image_size = 64;
  LatticeSpec lattice{4, 4, 1};
  GraphVariant variant = GraphVariant::Discrete;
  int max_entities = 3;
  std::uint64_t seed = 0;
};

struct SyntheticFrame {
  RgbImage image;
  std::vector<Detection> detections;
  double timestamp = 0.0;
};

/// Daylight factor in [0.25, 1]: darkest at midnight, brightest at noon.
double daylight(double seconds_since_midnight);

std::vector<SyntheticFrame> synthesize_frames(const SyntheticOptions& options);

/// Frames passed through build_datapoint.
std::vector<DataPoint> synthesize_dataset(const SyntheticOptions& options);

}  // namespace sgsynth
