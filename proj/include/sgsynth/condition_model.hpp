// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Scene graph -> condition volume omega: GAT layers, lattice readout into a
// latent image, then four 2x transpose-convolution stages.

#pragma once

#include <span>
#include <vector>

#include <torch/torch.h>

#include "sgsynth/model_config.hpp"
#include "sgsynth/scene_graph.hpp"

namespace sgsynth {

/// Several scene graphs flattened into one disjoint graph.
struct GraphBatch {
  torch::Tensor features;      // total_nodes x F
  torch::Tensor src;           // E, message source
  torch::Tensor dst;           // E, message target
  torch::Tensor lattice_nodes; // batch * rows * cols, row-major per graph
  int batch = 0;
  int rows = 0;
  int cols = 0;
  GraphVariant variant = GraphVariant::Discrete;
};

/// All graphs must share variant and lattice. Throws DomainError otherwise or
/// when a lattice cell has no node.
GraphBatch make_graph_batch(std::span<const SceneGraph* const> graphs, torch::Dtype dtype = torch::kFloat64);
GraphBatch make_graph_batch(const SceneGraph& graph, torch::Dtype dtype = torch::kFloat64);

class GatLayerImpl : public torch::nn::Module {
 public:
  /// `out_features` per head; heads are concatenated when `concat`, else averaged.
  GatLayerImpl(int in_features, int out_features, int heads, bool concat, double negative_slope = 0.2);

  /// Self-loops are added to (src, dst) before attention. ELU output.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& src, const torch::Tensor& dst);

  struct Attention {
    torch::Tensor src;    // with self-loops appended
    torch::Tensor dst;
    torch::Tensor alpha;  // E x heads, sums to 1 over each target's in-edges
  };
  Attention attention(const torch::Tensor& x, const torch::Tensor& src, const torch::Tensor& dst);

  int in_features() const { return in_; }
  int output_width() const { return concat_ ? heads_ * out_ : out_; }

  torch::Tensor weight;      // in x (heads * out)
  torch::Tensor att_src;     // heads x out
  torch::Tensor att_dst;     // heads x out
  torch::Tensor bias;        // output_width

 private:
  torch::Tensor project(const torch::Tensor& x) const;
  Attention attend(const torch::Tensor& wh, const torch::Tensor& src, const torch::Tensor& dst) const;

  int in_;
  int out_;
  int heads_;
  bool concat_;
  double slope_;
};
TORCH_MODULE(GatLayer);

/// Grid-node embeddings copied into a batch x C x rows x cols image.
torch::Tensor extract_latent_image(const torch::Tensor& embeddings, const torch::Tensor& lattice_nodes, int batch,
                                   int rows, int cols);

struct ConditionOutput {
  torch::Tensor omega;   // batch x C_omega x rows*16 x cols*16
  torch::Tensor latent;  // batch x C_latent x rows x cols
};

/// Parameters are float64; outputs are float64.
class ConditionModelImpl : public torch::nn::Module {
 public:
  explicit ConditionModelImpl(const ModelConfig& config);

  ConditionOutput forward(const GraphBatch& graphs);
  /// Final GAT node embeddings (before the lattice readout).
  torch::Tensor embed(const GraphBatch& graphs);

  const std::vector<GatLayer>& gat_layers() const { return gat_; }

 private:
  ModelConfig config_;
  std::vector<GatLayer> gat_;
  std::vector<torch::nn::ConvTranspose2d> up_;
};
TORCH_MODULE(ConditionModel);

/// x / sqrt(mean over channels of x^2 + 1e-8), per pixel.
torch::Tensor pixel_norm(const torch::Tensor& x);

}  // namespace sgsynth
