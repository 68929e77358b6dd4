// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Condition model + generator + discriminator: training, checkpoints, inference.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <torch/script.h>
#include <torch/torch.h>

#include "sgsynth/condition_model.hpp"
#include "sgsynth/dataset.hpp"
#include "sgsynth/evaluation.hpp"
#include "sgsynth/model_config.hpp"
#include "sgsynth/spade.hpp"

namespace sgsynth {

/// Networks built from one ModelConfig. Parameters are initialized from `seed`.
struct Model {
  explicit Model(const ModelConfig& config, std::uint64_t seed = 0);

  ModelConfig config;
  ConditionModel condition{nullptr};  // null for the baseline
  Generator generator{nullptr};
  MultiscaleDiscriminator discriminator{nullptr};

  /// Parameters updated by the generator optimizer (condition model included).
  std::vector<torch::Tensor> generator_side_parameters() const;
  /// Every parameter under a stable dotted name.
  std::vector<std::pair<std::string, torch::Tensor>> named_parameters() const;
};

/// DataPoints as tensors: images in [-1,1], one-hot segmaps, batched graphs.
struct TensorBatch {
  torch::Tensor images;   // n x 3 x S x S
  torch::Tensor segmaps;  // n x 5 x S x S
  GraphBatch graphs;
};

TensorBatch make_tensor_batch(std::span<const DataPoint> points, const ModelConfig& config);

torch::Tensor image_to_tensor(const RgbImage& image);
/// c x h x w in [-1,1] -> 8-bit image (rounded, clamped).
RgbImage tensor_to_image(const torch::Tensor& chw);

/// Standard-normal noise, deterministic in (seed, count).
torch::Tensor seeded_noise(std::uint64_t seed, std::int64_t count, int dim);

struct LossReport {
  std::int64_t step = 0;
  double d_real = 0.0;
  double d_fake = 0.0;
  double g_adversarial = 0.0;
  double g_feature_matching = 0.0;
  double g_total = 0.0;
  /// L2 norm of the gradient on the first GAT layer's weights in the generator step.
  double gat_grad_norm = 0.0;
};

nlohmann::json to_json(const LossReport& report);

class TrainState {
 public:
  TrainState(const ModelConfig& model_config, const TrainConfig& train_config);

  Model& model() { return *model_; }
  const Model& model() const { return *model_; }
  const TrainConfig& train_config() const { return train_; }
  std::int64_t step() const { return step_; }

  torch::optim::Adam& generator_optimizer() { return *opt_g_; }
  torch::optim::Adam& discriminator_optimizer() { return *opt_d_; }

  /// One discriminator update then one generator update. The batch is 2k reals;
  /// fakes come from the conditions of reals 0, 2, 4, ...
  /// Throws DomainError for odd or too small batches, TrainingError on non-finite losses.
  LossReport train_step(std::span<const DataPoint> batch);

  void save(const std::filesystem::path& path) const;
  static TrainState load(const std::filesystem::path& path);

 private:
  TrainState(std::unique_ptr<Model> model, const TrainConfig& train_config, std::int64_t step);
  void make_optimizers();

  std::unique_ptr<Model> model_;
  TrainConfig train_;
  std::int64_t step_ = 0;
  std::unique_ptr<torch::optim::Adam> opt_g_;
  std::unique_ptr<torch::optim::Adam> opt_d_;
};

/// Loss terms of one step on a prepared batch, without touching optimizers.
struct StepLosses {
  torch::Tensor d_real;
  torch::Tensor d_fake;
  torch::Tensor g_adversarial;
  torch::Tensor g_feature_matching;
};
/// Discriminator loss with the generator side detached.
StepLosses discriminator_losses(Model& model, const TensorBatch& batch, const torch::Tensor& noise);
/// Generator-side losses; gradients reach the generator and condition model.
StepLosses generator_losses(Model& model, const TensorBatch& batch, const torch::Tensor& noise,
                            const TrainConfig& config);

/// One image from a graph and its segmentation map (batch of one).
RgbImage generate_from_condition(Model& model, const SceneGraph& graph, const SegmentationMap& segmap,
                                 std::uint64_t seed);

/// Builds graph and segmentation map from the scene, then generates. Throws
/// DomainError when an entity color does not match the model variant.
RgbImage generate_image(Model& model, std::span<const SceneEntity> entities, const TimeEncoding& time,
                        std::uint64_t seed);

struct ModelSummary {
  std::int64_t condition_parameters = 0;
  std::int64_t generator_parameters = 0;
  std::int64_t discriminator_parameters = 0;
  std::int64_t baseline_generator_parameters = 0;
  std::int64_t baseline_discriminator_parameters = 0;

  std::int64_t total() const { return condition_parameters + generator_parameters + discriminator_parameters; }
  std::int64_t baseline_total() const { return baseline_generator_parameters + baseline_discriminator_parameters; }
  /// Extra parameters relative to the segmentation-only baseline of the same generator.
  double overhead() const;
};

ModelSummary summarize(const ModelConfig& config);
nlohmann::json to_json(const ModelSummary& summary);

struct EvaluationOptions {
  std::uint64_t seed = 0;
  bool include_bus = false;
};

/// Generates one image per test point, scores them; per-image failures are
/// recorded and excluded.
EvalReport evaluate_model(Model& model, std::span<const DataPoint> test, const FeatureExtractor& extractor,
                          const Segmenter& segmenter, const EvaluationOptions& options = {});

/// TorchScript image embedding (e.g. an exported Inception pool layer). Input
/// is 1 x 3 x size x size in [0,1]; output is flattened.
class TorchScriptExtractor final : public FeatureExtractor {
 public:
  TorchScriptExtractor(const std::filesystem::path& path, int input_size);
  int dim() const override { return dim_; }
  std::vector<double> embed(const RgbImage& image) const override;
  std::string name() const override { return "torchscript:" + path_.string(); }

 private:
  std::filesystem::path path_;
  int input_size_;
  int dim_ = 0;
  mutable torch::jit::script::Module module_;
};

/// TorchScript segmenter returning 1 x 5 x H x W class scores for a 1 x 3 x H x W [0,1] image.
class TorchScriptSegmenter final : public Segmenter {
 public:
  explicit TorchScriptSegmenter(const std::filesystem::path& path);
  SegmentationMap segment(const RgbImage& generated, const DataPoint& reference, std::size_t index) const override;
  std::string name() const override { return "torchscript:" + path_.string(); }

 private:
  std::filesystem::path path_;
  mutable torch::jit::script::Module module_;
};

}  // namespace sgsynth
