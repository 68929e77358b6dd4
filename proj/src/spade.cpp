// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/spade.hpp"

#include "sgsynth/dataset.hpp"
#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

torch::nn::Conv2d conv(int in, int out, int kernel, int stride, int padding, bool bias = true) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias));
}

std::string shape_of(const torch::Tensor& t) {
  std::string s = "[";
  for (int i = 0; i < t.dim(); ++i) s += (i ? "," : "") + std::to_string(t.size(i));
  return s + "]";
}

}  // namespace

torch::Tensor spade_normalize(const torch::Tensor& h, const torch::Tensor& gamma, const torch::Tensor& beta,
                              double epsilon) {
  if (h.dim() != 4) throw DomainError("activation must be n x c x h x w, got " + shape_of(h));
  for (const auto* t : {&gamma, &beta}) {
    if (t->dim() != 4 || t->size(1) != h.size(1) || t->size(2) != h.size(2) || t->size(3) != h.size(3) ||
        (t->size(0) != h.size(0) && t->size(0) != 1)) {
      throw DomainError("modulation " + shape_of(*t) + " does not match activation " + shape_of(h));
    }
  }
  const auto mean = h.mean({0, 2, 3}, true);
  const auto var = (h - mean).pow(2).mean({0, 2, 3}, true);
  // Flooring the variance keeps the gradient finite for constant channels.
  const auto sigma = var.clamp_min(epsilon * epsilon).sqrt();
  return gamma * ((h - mean) / sigma) + beta;
}

torch::Tensor rescale_condition(const torch::Tensor& x, std::int64_t height, std::int64_t width) {
  if (x.size(2) == height && x.size(3) == width) return x;
  namespace F = torch::nn::functional;
  if (x.size(2) >= height && x.size(3) >= width) {
    return F::adaptive_avg_pool2d(x, F::AdaptiveAvgPool2dFuncOptions({height, width}));
  }
  return F::interpolate(
      x, F::InterpolateFuncOptions().size(std::vector<std::int64_t>{height, width}).mode(torch::kNearest));
}

torch::Tensor one_hot_segmap(const torch::Tensor& labels) {
  if (labels.dim() != 3) throw DomainError("label maps must be n x H x W");
  return torch::one_hot(labels.to(torch::kInt64), kSegmentationClasses).permute({0, 3, 1, 2}).to(torch::kFloat32);
}

SpadeNormImpl::SpadeNormImpl(int channels, int condition_channels, int hidden) : channels_(channels) {
  shared_ = register_module("shared", conv(condition_channels, hidden, 3, 1, 1));
  gamma_ = register_module("gamma", conv(hidden, channels, 3, 1, 1));
  beta_ = register_module("beta", conv(hidden, channels, 3, 1, 1));
  // Start near the identity modulation: gamma ~ 1, beta ~ 0.
  torch::NoGradGuard no_grad;
  gamma_->bias.fill_(1.0);
  beta_->bias.zero_();
}

std::pair<torch::Tensor, torch::Tensor> SpadeNormImpl::modulation(const torch::Tensor& h,
                                                                  const torch::Tensor& condition) {
  const auto c = rescale_condition(condition, h.size(2), h.size(3));
  const auto actv = torch::relu(shared_->forward(c));
  return {gamma_->forward(actv), beta_->forward(actv)};
}

torch::Tensor SpadeNormImpl::forward(const torch::Tensor& h, const torch::Tensor& condition) {
  if (h.dim() != 4 || h.size(1) != channels_) {
    throw DomainError("SPADE block expects " + std::to_string(channels_) + " channels, got " + shape_of(h));
  }
  const auto [gamma, beta] = modulation(h, condition);
  return spade_normalize(h, gamma, beta);
}

SpadeResBlockImpl::SpadeResBlockImpl(int in_channels, int out_channels, int condition_channels, int hidden)
    : learned_shortcut_(in_channels != out_channels) {
  const int middle = std::min(in_channels, out_channels);
  norm0_ = register_module("norm0", SpadeNorm(in_channels, condition_channels, hidden));
  conv0_ = register_module("conv0", conv(in_channels, middle, 3, 1, 1));
  norm1_ = register_module("norm1", SpadeNorm(middle, condition_channels, hidden));
  conv1_ = register_module("conv1", conv(middle, out_channels, 3, 1, 1));
  if (learned_shortcut_) {
    norm_s_ = register_module("norm_s", SpadeNorm(in_channels, condition_channels, hidden));
    conv_s_ = register_module("conv_s", conv(in_channels, out_channels, 1, 1, 0, false));
  }
}

torch::Tensor SpadeResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& condition) {
  const auto shortcut = learned_shortcut_ ? conv_s_->forward(norm_s_->forward(x, condition)) : x;
  auto dx = conv0_->forward(torch::leaky_relu(norm0_->forward(x, condition), 0.2));
  dx = conv1_->forward(torch::leaky_relu(norm1_->forward(dx, condition), 0.2));
  return shortcut + dx;
}

GeneratorImpl::GeneratorImpl(const ModelConfig& config) : config_(config) {
  validate(config);
  const int c0 = config.generator_channels.front();
  const int s0 = config.base_resolution;
  if (config.use_noise) {
    fc_ = register_module("fc", torch::nn::Linear(config.noise_dim, c0 * s0 * s0));
  } else {
    seg_in_ = register_module("seg_in", conv(kSegmentationClasses, c0, 3, 1, 1));
  }
  const int cond = kSegmentationClasses + (config.use_graph ? config.omega_channels() : 0);
  int in = c0;
  for (std::size_t i = 0; i < config.generator_channels.size(); ++i) {
    const int out = config.generator_channels[i];
    blocks_.push_back(
        register_module("block" + std::to_string(i), SpadeResBlock(in, out, cond, config.spade_hidden)));
    in = out;
  }
  to_rgb_ = register_module("to_rgb", conv(in, 3, 3, 1, 1));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& segmap, const torch::Tensor& omega,
                                     const torch::Tensor& noise) {
  const auto size = config_.image_size;
  if (segmap.dim() != 4 || segmap.size(1) != kSegmentationClasses || segmap.size(2) != size || segmap.size(3) != size) {
    throw DomainError("segmentation input " + shape_of(segmap) + " does not match the configured " +
                      std::to_string(size) + "x" + std::to_string(size) + " resolution");
  }
  const auto n = segmap.size(0);
  torch::Tensor condition = segmap;
  if (config_.use_graph) {
    if (!omega.defined() || omega.dim() != 4 || omega.size(0) != n || omega.size(1) != config_.omega_channels()) {
      throw DomainError("condition volume does not match the generator configuration");
    }
    condition = torch::cat({rescale_condition(omega.to(segmap.scalar_type()), size, size), segmap}, 1);
  }

  const int c0 = config_.generator_channels.front();
  const int s0 = config_.base_resolution;
  torch::Tensor x;
  if (config_.use_noise) {
    if (!noise.defined() || noise.dim() != 2 || noise.size(0) != n || noise.size(1) != config_.noise_dim) {
      throw DomainError("noise must be n x " + std::to_string(config_.noise_dim));
    }
    x = fc_->forward(noise).view({n, c0, s0, s0});
  } else {
    x = seg_in_->forward(rescale_condition(segmap, s0, s0));
  }
  namespace F = torch::nn::functional;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    x = blocks_[i]->forward(x, condition);
    if (i + 1 < blocks_.size()) {
      x = F::interpolate(x, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
    }
  }
  return torch::tanh(to_rgb_->forward(torch::leaky_relu(x, 0.2)));
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(int in_channels, int channels, int layers) {
  // Stride-2 4x4 convolutions halve exactly; the last two layers keep the size.
  auto norm = [](int ch) { return torch::nn::InstanceNorm2d(torch::nn::InstanceNorm2dOptions(ch)); };
  auto lrelu = [] { return torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)); };
  int nf = channels;
  stages_.push_back(torch::nn::Sequential(conv(in_channels, nf, 4, 2, 1), lrelu()));
  for (int i = 1; i < layers; ++i) {
    const int next = std::min(nf * 2, 512);
    stages_.push_back(torch::nn::Sequential(conv(nf, next, 4, 2, 1), norm(next), lrelu()));
    nf = next;
  }
  const int next = std::min(nf * 2, 512);
  stages_.push_back(torch::nn::Sequential(conv(nf, next, 3, 1, 1), norm(next), lrelu()));
  stages_.push_back(torch::nn::Sequential(conv(next, 1, 3, 1, 1)));
  for (std::size_t i = 0; i < stages_.size(); ++i) register_module("stage" + std::to_string(i), stages_[i]);
}

std::vector<torch::Tensor> PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> out;
  auto h = x;
  for (auto& stage : stages_) {
    h = stage->forward(h);
    out.push_back(h);
  }
  return out;
}

MultiscaleDiscriminatorImpl::MultiscaleDiscriminatorImpl(const ModelConfig& config)
    : in_channels_(config.discriminator_input_channels()) {
  for (int s = 0; s < config.discriminator_scales; ++s) {
    scales_.push_back(register_module(
        "scale" + std::to_string(s),
        PatchDiscriminator(in_channels_, config.discriminator_channels, config.discriminator_layers)));
  }
}

std::vector<std::vector<torch::Tensor>> MultiscaleDiscriminatorImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != in_channels_) {
    throw DomainError("discriminator expects " + std::to_string(in_channels_) + " channels, got " + shape_of(x));
  }
  namespace F = torch::nn::functional;
  std::vector<std::vector<torch::Tensor>> out;
  auto h = x;
  for (std::size_t s = 0; s < scales_.size(); ++s) {
    out.push_back(scales_[s]->forward(h));
    if (s + 1 < scales_.size()) {
      h = F::avg_pool2d(h, F::AvgPool2dFuncOptions(3).stride(2).padding(1).count_include_pad(false));
    }
  }
  return out;
}

torch::Tensor discriminator_slices(const DiscriminatorSide& side) {
  const auto& img = side.images;
  if (img.dim() != 4 || img.size(1) != 3) throw DomainError("images must be n x 3 x H x W");
  if (!side.segmaps.defined() || side.segmaps.dim() != 4 || side.segmaps.size(0) != img.size(0) ||
      side.segmaps.size(1) != kSegmentationClasses || side.segmaps.size(2) != img.size(2) ||
      side.segmaps.size(3) != img.size(3)) {
    throw DomainError("every image needs a matching 5-channel segmentation map");
  }
  std::vector<torch::Tensor> parts = {img, side.segmaps.to(img.dtype())};
  if (side.latents.defined()) {
    if (side.latents.dim() != 4 || side.latents.size(0) != img.size(0)) {
      throw DomainError("every image needs a matching latent image");
    }
    namespace F = torch::nn::functional;
    parts.push_back(F::interpolate(side.latents.to(img.scalar_type()), F::InterpolateFuncOptions()
                                                     .size(std::vector<std::int64_t>{img.size(2), img.size(3)})
                                                     .mode(torch::kNearest)));
  }
  return torch::cat(parts, 1);
}

torch::Tensor assemble_discriminator_batch(const DiscriminatorSide& reals, const DiscriminatorSide& fakes) {
  const auto k = fakes.images.size(0);
  if (reals.images.size(0) != 2 * k || k == 0) {
    throw DomainError("the discriminator takes two real images per fake image, got " +
                      std::to_string(reals.images.size(0)) + " real and " + std::to_string(k) + " fake");
  }
  if (reals.latents.defined() != fakes.latents.defined()) {
    throw DomainError("latent images must be given for both reals and fakes or for neither");
  }
  const auto real = discriminator_slices(reals);
  const auto fake = discriminator_slices(fakes);
  if (real.sizes().slice(1) != fake.sizes().slice(1)) throw DomainError("real and fake slices differ in shape");
  const auto pair_index = torch::arange(2 * k, torch::kInt64).floor_divide(2);
  return torch::cat({fake.index_select(0, pair_index), real}, 2);
}

std::pair<torch::Tensor, torch::Tensor> split_fake_real(const torch::Tensor& stacked) {
  const auto h = stacked.size(2);
  if (h % 2 != 0) throw DomainError("stacked tensor height must be even");
  return {stacked.narrow(2, 0, h / 2), stacked.narrow(2, h / 2, h / 2)};
}

}  // namespace sgsynth
