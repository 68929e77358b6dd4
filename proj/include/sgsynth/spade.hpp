// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// SPADE generator driven by omega, multi-scale patch discriminator, and the
// height-stacked real/fake discriminator input.

#pragma once

#include <vector>

#include <torch/torch.h>

#include "sgsynth/model_config.hpp"

namespace sgsynth {

inline constexpr double kSpadeEpsilon = 1e-5;

/// gamma * (h - mu_c) / sigma_c + beta with mu_c, sigma_c over (n, h, w) and
/// sigma_c floored at `epsilon`. gamma/beta are n x c x h x w (or broadcastable).
torch::Tensor spade_normalize(const torch::Tensor& h, const torch::Tensor& gamma, const torch::Tensor& beta,
                              double epsilon = kSpadeEpsilon);

/// Resizes a conditioning tensor: area averaging when shrinking, nearest when growing.
torch::Tensor rescale_condition(const torch::Tensor& x, std::int64_t height, std::int64_t width);

/// Label map batch (n x H x W, int64) -> n x 5 x H x W one-hot.
torch::Tensor one_hot_segmap(const torch::Tensor& labels);

class SpadeNormImpl : public torch::nn::Module {
 public:
  SpadeNormImpl(int channels, int condition_channels, int hidden);

  /// gamma(cond), beta(cond) at h's resolution.
  std::pair<torch::Tensor, torch::Tensor> modulation(const torch::Tensor& h, const torch::Tensor& condition);
  torch::Tensor forward(const torch::Tensor& h, const torch::Tensor& condition);

 private:
  int channels_;
  torch::nn::Conv2d shared_{nullptr};
  torch::nn::Conv2d gamma_{nullptr};
  torch::nn::Conv2d beta_{nullptr};
};
TORCH_MODULE(SpadeNorm);

class SpadeResBlockImpl : public torch::nn::Module {
 public:
  SpadeResBlockImpl(int in_channels, int out_channels, int condition_channels, int hidden);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& condition);

 private:
  bool learned_shortcut_;
  SpadeNorm norm0_{nullptr}, norm1_{nullptr}, norm_s_{nullptr};
  torch::nn::Conv2d conv0_{nullptr}, conv1_{nullptr}, conv_s_{nullptr};
};
TORCH_MODULE(SpadeResBlock);

class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const ModelConfig& config);

  /// segmap: n x 5 x S x S one-hot; omega: n x C x h x w (undefined for the
  /// baseline); noise: n x noise_dim (ignored when noise is disabled).
  /// Returns n x 3 x S x S in [-1, 1].
  torch::Tensor forward(const torch::Tensor& segmap, const torch::Tensor& omega, const torch::Tensor& noise);

 private:
  ModelConfig config_;
  torch::nn::Linear fc_{nullptr};
  torch::nn::Conv2d seg_in_{nullptr};
  std::vector<SpadeResBlock> blocks_;
  torch::nn::Conv2d to_rgb_{nullptr};
};
TORCH_MODULE(Generator);

/// One patch discriminator; returns every layer's activation, the last being
/// the 1-channel score map.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  PatchDiscriminatorImpl(int in_channels, int channels, int layers);
  std::vector<torch::Tensor> forward(const torch::Tensor& x);

 private:
  std::vector<torch::nn::Sequential> stages_;
};
TORCH_MODULE(PatchDiscriminator);

class MultiscaleDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit MultiscaleDiscriminatorImpl(const ModelConfig& config);
  /// One feature list per scale, full resolution first.
  std::vector<std::vector<torch::Tensor>> forward(const torch::Tensor& x);
  int input_channels() const { return in_channels_; }

 private:
  int in_channels_;
  std::vector<PatchDiscriminator> scales_;
};
TORCH_MODULE(MultiscaleDiscriminator);

/// Images with their conditioning for the discriminator.
struct DiscriminatorSide {
  torch::Tensor images;   // n x 3 x H x W
  torch::Tensor segmaps;  // n x 5 x H x W one-hot
  torch::Tensor latents;  // n x C x rows x cols, undefined for the baseline
};

/// Image, one-hot segmap and (nearest-upsampled) latent image concatenated on channels.
torch::Tensor discriminator_slices(const DiscriminatorSide& side);

/// Needs |reals| = 2 |fakes|. Slice j stacks fake j/2 on top of real j along
/// the height: output is 2k x (8 + C) x 2H x W.
torch::Tensor assemble_discriminator_batch(const DiscriminatorSide& reals, const DiscriminatorSide& fakes);

/// Splits along the height into (fake rows, real rows).
std::pair<torch::Tensor, torch::Tensor> split_fake_real(const torch::Tensor& stacked);

}  // namespace sgsynth
