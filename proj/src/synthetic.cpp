// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

std::uint8_t shade(double v, double light) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * light * 255.0), 0L, 255L));
}

}  // namespace

double daylight(double seconds) {
  return 0.25 + 0.75 * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * seconds / 86400.0));
}

std::vector<SyntheticFrame> synthesize_frames(const SyntheticOptions& o) {
  if (o.count < 0 || o.image_size < 1 || o.max_entities < 0) throw DomainError("invalid synthetic dataset options");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto colors = palette();
  std::vector<SyntheticFrame> frames;
  const int s = o.image_size;
  for (int n = 0; n < o.count; ++n) {
    SyntheticFrame f;
    f.timestamp = std::floor(unit(rng) * 86400.0);
    const double light = daylight(f.timestamp);
    f.image = RgbImage(s, s);
    // Asphalt band across the middle, verge above and below.
    for (int y = 0; y < s; ++y) {
      const bool road = y >= s / 3 && y < 2 * s / 3;
      for (int x = 0; x < s; ++x) {
        auto* p = f.image.pixel(y, x);
        p[0] = shade(road ? 0.35 : 0.30, light);
        p[1] = shade(road ? 0.35 : 0.55, light);
        p[2] = shade(road ? 0.38 : 0.25, light);
      }
    }
    const int entities = static_cast<int>(unit(rng) * (o.max_entities + 1));
    for (int e = 0; e < std::min(entities, o.max_entities); ++e) {
      Detection d;
      d.entity_class = kEntityClasses[static_cast<std::size_t>(unit(rng) * kEntityClasses.size()) % kEntityClasses.size()];
      d.bbox.w = 0.12 + 0.2 * unit(rng);
      d.bbox.h = 0.12 + 0.2 * unit(rng);
      d.bbox.x = d.bbox.w / 2 + (1.0 - d.bbox.w) * unit(rng);
      d.bbox.y = d.bbox.h / 2 + (1.0 - d.bbox.h) * unit(rng);
      d.order_index = e;
      const Rgb c = palette_rgb(colors[static_cast<std::size_t>(unit(rng) * colors.size()) % colors.size()]);
      const auto r = pixel_rect(d.bbox, s, s);
      for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
          auto* p = f.image.pixel(y, x);
          p[0] = shade(c.r, light);
          p[1] = shade(c.g, light);
          p[2] = shade(c.b, light);
        }
      }
      f.detections.push_back(d);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<DataPoint> synthesize_dataset(const SyntheticOptions& o) {
  DatapointOptions opts;
  opts.lattice = o.lattice;
  opts.variant = o.variant;
  opts.color_seed = o.seed;
  std::vector<DataPoint> out;
  for (const auto& f : synthesize_frames(o)) out.push_back(build_datapoint(f.image, f.detections, f.timestamp, opts));
  return out;
}

}  // namespace sgsynth
