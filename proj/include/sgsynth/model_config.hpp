// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Architecture and training hyperparameters, loadable from JSON.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "sgsynth/scene_graph.hpp"

namespace sgsynth {

struct ModelConfig {
  GraphVariant variant = GraphVariant::Discrete;
  LatticeSpec lattice;
  /// false builds the segmentation-only baseline (no condition model).
  bool use_graph = true;

  /// Output width of each GAT layer (all heads together for concatenating layers).
  std::vector<int> gat_widths = {64, 64, 64};
  std::vector<int> gat_heads = {4, 4, 1};
  double gat_negative_slope = 0.2;
  /// Channels after each 2x transpose convolution; the last one is the width of omega.
  std::vector<int> upsample_channels = {64, 64, 64, 64};

  int image_size = 640;
  int base_resolution = 10;
  /// One SPADE residual block per entry; block i runs at base_resolution * 2^i.
  std::vector<int> generator_channels = {256, 256, 256, 128, 64, 32, 32};
  int spade_hidden = 64;
  int noise_dim = 64;
  bool use_noise = true;

  int discriminator_channels = 64;
  int discriminator_layers = 3;
  int discriminator_scales = 2;

  int latent_channels() const { return gat_widths.empty() ? 0 : gat_widths.back(); }
  int omega_channels() const { return upsample_channels.empty() ? 0 : upsample_channels.back(); }
  /// Channels per discriminator slice: image + segmentation one-hot + latent image.
  int discriminator_input_channels() const;
  int omega_height() const { return lattice.rows * 16; }
  int omega_width() const { return lattice.cols * 16; }

  bool operator==(const ModelConfig&) const = default;
};

/// Throws DomainError on inconsistent sizes.
void validate(const ModelConfig& config);

struct TrainConfig {
  int batch_size = 12;
  int eval_batch_size = 24;
  double generator_lr = 1e-4;
  double discriminator_lr = 4e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double gan_weight = 1.0;
  double feature_matching_weight = 10.0;
  std::uint64_t seed = 0;
  int steps = 1000;
  int checkpoint_every = 0;

  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

/// 64x64 images over a 4x4 lattice, small enough to train on a CPU in minutes.
ModelConfig toy_model_config(GraphVariant variant = GraphVariant::Discrete);
TrainConfig toy_train_config();

nlohmann::json to_json(const ModelConfig& config);
nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

}  // namespace sgsynth
