// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/color.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

struct WeightedColor {
  Rgb color;
  std::int64_t count = 0;
};

double sq_dist(const Rgb& a, const Rgb& b) {
  const double dr = a.r - b.r;
  const double dg = a.g - b.g;
  const double db = a.b - b.b;
  return dr * dr + dg * dg + db * db;
}

std::vector<WeightedColor> canonicalize(std::span<const Rgb> pixels) {
  std::vector<Rgb> sorted(pixels.begin(), pixels.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<WeightedColor> out;
  for (const auto& p : sorted) {
    if (!out.empty() && out.back().color == p) {
      ++out.back().count;
    } else {
      out.push_back({p, 1});
    }
  }
  return out;
}

// Uniform double in [0,1) from the raw engine output; avoids the
// implementation-defined std distributions so results match across toolchains.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t sample_index(std::span<const double> weights, std::mt19937_64& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double target = unit_uniform(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  // Rounding can leave target == total; fall back to the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

std::vector<Rgb> seed_centers(const std::vector<WeightedColor>& points, int k, std::mt19937_64& rng) {
  std::vector<Rgb> centers;
  std::vector<double> weights(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) weights[i] = static_cast<double>(points[i].count);
  centers.push_back(points[sample_index(weights, rng)].color);

  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points[i].color, centers.back()));
      weights[i] = nearest[i] * static_cast<double>(points[i].count);
    }
    centers.push_back(points[sample_index(weights, rng)].color);
  }
  return centers;
}

std::size_t closest(const std::vector<Rgb>& centers, const Rgb& p) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = sq_dist(centers[c], p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double softmax_denominator(std::span<const double> xs) {
  double total = 0.0;
  for (double x : xs) total += std::exp(x);
  return total;
}

}  // namespace

std::vector<KMeansCluster> kmeans_colors(std::span<const Rgb> pixels, const KMeansOptions& options) {
  if (pixels.empty()) throw DomainError("color clustering needs at least one pixel");
  if (options.k < 1) throw DomainError("k must be positive");

  const auto points = canonicalize(pixels);
  std::vector<KMeansCluster> clusters;

  if (static_cast<int>(points.size()) <= options.k) {
    for (const auto& p : points) clusters.push_back({p.color, p.count});
  } else {
    std::mt19937_64 rng(options.seed);
    auto centers = seed_centers(points, options.k, rng);
    std::vector<std::size_t> assignment(points.size(), 0);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
      for (std::size_t i = 0; i < points.size(); ++i) assignment[i] = closest(centers, points[i].color);

      std::vector<Rgb> sums(centers.size());
      std::vector<std::int64_t> counts(centers.size(), 0);
      for (std::size_t i = 0; i < points.size(); ++i) {
        const auto c = assignment[i];
        const auto n = static_cast<double>(points[i].count);
        sums[c].r += n * points[i].color.r;
        sums[c].g += n * points[i].color.g;
        sums[c].b += n * points[i].color.b;
        counts[c] += points[i].count;
      }
      double shift = 0.0;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        if (counts[c] == 0) continue;  // empty clusters keep their center
        const auto n = static_cast<double>(counts[c]);
        const Rgb updated{sums[c].r / n, sums[c].g / n, sums[c].b / n};
        shift = std::max(shift, std::sqrt(sq_dist(updated, centers[c])));
        centers[c] = updated;
      }
      if (shift < options.tolerance) break;
    }

    std::vector<std::int64_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) counts[closest(centers, points[i].color)] += points[i].count;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (counts[c] > 0) clusters.push_back({centers[c], counts[c]});
    }
  }

  std::sort(clusters.begin(), clusters.end(), [](const KMeansCluster& a, const KMeansCluster& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.center < b.center;
  });
  return clusters;
}

ClusterColors extract_color_clusters(std::span<const Rgb> pixels, int k, std::uint64_t seed) {
  if (k < 1 || k > kColorClusters) throw DomainError("k must be in [1, 5]");
  KMeansOptions options;
  options.k = k;
  options.seed = seed;
  const auto clusters = kmeans_colors(pixels, options);

  std::int64_t total = 0;
  for (const auto& c : clusters) total += c.count;

  std::array<double, kColorClusters> proportions{};
  ClusterColors out;
  for (std::size_t i = 0; i < clusters.size() && i < kColorClusters; ++i) {
    proportions[i] = static_cast<double>(clusters[i].count) / static_cast<double>(total);
    out.clusters[i].center = clusters[i].center;
  }
  const double denom = softmax_denominator(proportions);
  for (std::size_t i = 0; i < kColorClusters; ++i) out.clusters[i].weight = std::exp(proportions[i]) / denom;
  return out;
}

PaletteColor nearest_palette_color(const Rgb& rgb) {
  const double mean = (rgb.r + rgb.g + rgb.b) / 3.0;
  const double spread = std::sqrt(((rgb.r - mean) * (rgb.r - mean) + (rgb.g - mean) * (rgb.g - mean) +
                                   (rgb.b - mean) * (rgb.b - mean)) /
                                  3.0);
  const bool allow_gray = spread < kGrayChromaThreshold;

  PaletteColor best = PaletteColor::Black;
  double best_d = std::numeric_limits<double>::infinity();
  for (PaletteColor c : palette()) {
    if (c == PaletteColor::Gray && !allow_gray) continue;
    const double d = sq_dist(rgb, palette_rgb(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

DiscreteColor discretize_color(std::span<const Rgb> pixels, std::uint64_t seed) {
  KMeansOptions options;
  options.seed = seed;
  const auto clusters = kmeans_colors(pixels, options);

  Rgb mean;
  double total = 0.0;
  for (std::size_t i = 0; i < clusters.size() && i < 3; ++i) {
    const auto n = static_cast<double>(clusters[i].count);
    mean.r += n * clusters[i].center.r;
    mean.g += n * clusters[i].center.g;
    mean.b += n * clusters[i].center.b;
    total += n;
  }
  mean = {mean.r / total, mean.g / total, mean.b / total};
  return {nearest_palette_color(mean)};
}

ColorFeature featurize_color(std::span<const Rgb> pixels, GraphVariant variant, std::uint64_t seed) {
  if (variant == GraphVariant::Cluster) return extract_color_clusters(pixels, kColorClusters, seed);
  return discretize_color(pixels, seed);
}

}  // namespace sgsynth
