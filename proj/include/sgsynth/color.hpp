// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Color featurization of entity crops.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgsynth/scene.hpp"

namespace sgsynth {

struct KMeansOptions {
  int k = kColorClusters;
  int max_iterations = 20;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct KMeansCluster {
  Rgb center;
  std::int64_t count = 0;
};

/// Weighted k-means over the distinct colors of `pixels` with k-means++ seeding.
///
/// The input is canonicalized (sorted, deduplicated with multiplicities) before
/// seeding, so the result depends on the pixel multiset and the seed only, not on
/// pixel order. Empty clusters are dropped; the result is sorted by descending
/// count, ties broken by center. Throws DomainError on empty input.
std::vector<KMeansCluster> kmeans_colors(std::span<const Rgb> pixels, const KMeansOptions& options = {});

/// Top-5 cluster centers with weights = softmax(count / total), zero padded.
ClusterColors extract_color_clusters(std::span<const Rgb> pixels, int k = kColorClusters,
                                     std::uint64_t seed = 0);

/// Standard deviation across the three channels below which a color may be labeled gray.
inline constexpr double kGrayChromaThreshold = 30.0 / 255.0;

/// Nearest palette color to `rgb`, with gray accepted only for near-achromatic colors.
PaletteColor nearest_palette_color(const Rgb& rgb);

/// Count-weighted mean of the top-3 k-means centers, snapped to the palette.
DiscreteColor discretize_color(std::span<const Rgb> pixels, std::uint64_t seed = 0);

ColorFeature featurize_color(std::span<const Rgb> pixels, GraphVariant variant, std::uint64_t seed = 0);

}  // namespace sgsynth
