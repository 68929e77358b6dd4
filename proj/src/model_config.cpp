// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/model_config.hpp"

#include <set>

#include "sgsynth/dataset.hpp"
#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw DomainError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw DomainError(std::string("unknown ") + what + " key '" + key + "'");
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DomainError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

int ModelConfig::discriminator_input_channels() const {
  return 3 + kSegmentationClasses + (use_graph ? latent_channels() : 0);
}

void validate(const ModelConfig& c) {
  validate(c.lattice);
  if (c.gat_widths.size() != c.gat_heads.size() || c.gat_widths.empty()) {
    throw DomainError("gat_widths and gat_heads must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < c.gat_widths.size(); ++i) {
    if (c.gat_widths[i] < 1 || c.gat_heads[i] < 1) throw DomainError("GAT widths and heads must be positive");
    const bool concat = i + 1 < c.gat_widths.size();
    if (concat && c.gat_widths[i] % c.gat_heads[i] != 0) {
      throw DomainError("GAT layer " + std::to_string(i) + " width must be divisible by its head count");
    }
  }
  if (c.upsample_channels.size() != 4) throw DomainError("the condition model has exactly 4 upsampling stages");
  for (int ch : c.upsample_channels) {
    if (ch < 1) throw DomainError("upsample channels must be positive");
  }
  if (c.generator_channels.empty()) throw DomainError("the generator needs at least one block");
  for (int ch : c.generator_channels) {
    if (ch < 1) throw DomainError("generator channels must be positive");
  }
  if (c.base_resolution < 1) throw DomainError("base_resolution must be positive");
  const long long top = static_cast<long long>(c.base_resolution) << (c.generator_channels.size() - 1);
  if (top != c.image_size) {
    throw DomainError("image_size " + std::to_string(c.image_size) + " != base_resolution * 2^(blocks-1) = " +
                      std::to_string(top));
  }
  if (c.spade_hidden < 1 || c.noise_dim < 1) throw DomainError("spade_hidden and noise_dim must be positive");
  if (c.discriminator_channels < 1 || c.discriminator_layers < 1 || c.discriminator_scales < 1) {
    throw DomainError("discriminator sizes must be positive");
  }
  if ((c.image_size >> (c.discriminator_layers + c.discriminator_scales - 1)) < 1) {
    throw DomainError("image too small for the discriminator depth");
  }
}

void validate(const TrainConfig& c) {
  if (c.batch_size < 2 || c.batch_size % 2 != 0) throw DomainError("batch_size must be even and >= 2");
  if (c.eval_batch_size < 1) throw DomainError("eval_batch_size must be positive");
  if (c.generator_lr < 0 || c.discriminator_lr < 0) throw DomainError("learning rates must be >= 0");
  if (c.beta1 < 0 || c.beta1 >= 1 || c.beta2 < 0 || c.beta2 >= 1) throw DomainError("Adam betas must be in [0,1)");
  if (c.steps < 0 || c.checkpoint_every < 0) throw DomainError("steps and checkpoint_every must be >= 0");
}

ModelConfig toy_model_config(GraphVariant variant) {
  ModelConfig c;
  c.variant = variant;
  c.lattice = {4, 4, 1};
  c.gat_widths = {16, 16, 16};
  c.gat_heads = {4, 4, 1};
  c.upsample_channels = {16, 16, 16, 16};
  c.image_size = 64;
  c.base_resolution = 4;
  c.generator_channels = {32, 32, 32, 16, 16};
  c.spade_hidden = 16;
  c.noise_dim = 32;
  c.discriminator_channels = 16;
  c.discriminator_layers = 3;
  c.discriminator_scales = 2;
  return c;
}

TrainConfig toy_train_config() {
  TrainConfig t;
  t.batch_size = 4;
  t.eval_batch_size = 4;
  t.steps = 100;
  return t;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"lattice", to_json(c.lattice)},
          {"use_graph", c.use_graph},
          {"gat_widths", c.gat_widths},
          {"gat_heads", c.gat_heads},
          {"gat_negative_slope", c.gat_negative_slope},
          {"upsample_channels", c.upsample_channels},
          {"image_size", c.image_size},
          {"base_resolution", c.base_resolution},
          {"generator_channels", c.generator_channels},
          {"spade_hidden", c.spade_hidden},
          {"noise_dim", c.noise_dim},
          {"use_noise", c.use_noise},
          {"discriminator_channels", c.discriminator_channels},
          {"discriminator_layers", c.discriminator_layers},
          {"discriminator_scales", c.discriminator_scales}};
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"eval_batch_size", c.eval_batch_size},
          {"generator_lr", c.generator_lr},
          {"discriminator_lr", c.discriminator_lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"gan_weight", c.gan_weight},
          {"feature_matching_weight", c.feature_matching_weight},
          {"seed", c.seed},
          {"steps", c.steps},
          {"checkpoint_every", c.checkpoint_every}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
  reject_unknown(j,
                 {"variant", "lattice", "use_graph", "gat_widths", "gat_heads", "gat_negative_slope",
                  "upsample_channels", "image_size", "base_resolution", "generator_channels", "spade_hidden",
                  "noise_dim", "use_noise", "discriminator_channels", "discriminator_layers",
                  "discriminator_scales"},
                 "model config");
  if (j.contains("variant")) c.variant = parse_graph_variant(j.at("variant").get<std::string>());
  if (j.contains("lattice")) c.lattice = lattice_spec_from_json(j.at("lattice"));
  read(j, "use_graph", c.use_graph);
  read(j, "gat_widths", c.gat_widths);
  read(j, "gat_heads", c.gat_heads);
  read(j, "gat_negative_slope", c.gat_negative_slope);
  read(j, "upsample_channels", c.upsample_channels);
  read(j, "image_size", c.image_size);
  read(j, "base_resolution", c.base_resolution);
  read(j, "generator_channels", c.generator_channels);
  read(j, "spade_hidden", c.spade_hidden);
  read(j, "noise_dim", c.noise_dim);
  read(j, "use_noise", c.use_noise);
  read(j, "discriminator_channels", c.discriminator_channels);
  read(j, "discriminator_layers", c.discriminator_layers);
  read(j, "discriminator_scales", c.discriminator_scales);
  validate(c);
  return c;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  reject_unknown(j,
                 {"batch_size", "eval_batch_size", "generator_lr", "discriminator_lr", "beta1", "beta2",
                  "gan_weight", "feature_matching_weight", "seed", "steps", "checkpoint_every"},
                 "train config");
  read(j, "batch_size", c.batch_size);
  read(j, "eval_batch_size", c.eval_batch_size);
  read(j, "generator_lr", c.generator_lr);
  read(j, "discriminator_lr", c.discriminator_lr);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "gan_weight", c.gan_weight);
  read(j, "feature_matching_weight", c.feature_matching_weight);
  read(j, "seed", c.seed);
  read(j, "steps", c.steps);
  read(j, "checkpoint_every", c.checkpoint_every);
  validate(c);
  return c;
}

}  // namespace sgsynth
