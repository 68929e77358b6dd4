// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/condition_model.hpp"

#include <limits>

#include "sgsynth/error.hpp"

namespace sgsynth {

GraphBatch make_graph_batch(std::span<const SceneGraph* const> graphs, torch::Dtype dtype) {
  if (graphs.empty()) throw DomainError("graph batch is empty");
  const SceneGraph& first = *graphs.front();
  GraphBatch out;
  out.batch = static_cast<int>(graphs.size());
  out.rows = first.lattice().rows;
  out.cols = first.lattice().cols;
  out.variant = first.variant();
  const int width = first.feature_width();

  std::vector<double> features;
  std::vector<std::int64_t> src, dst, lattice;
  std::int64_t offset = 0;
  for (const SceneGraph* g : graphs) {
    if (g->variant() != first.variant() || !(g->lattice() == first.lattice())) {
      throw DomainError("graphs in a batch must share variant and lattice");
    }
    features.insert(features.end(), g->feature_matrix().begin(), g->feature_matrix().end());
    for (const Edge& e : g->edges()) {
      src.push_back(offset + e.src);
      dst.push_back(offset + e.dst);
    }
    for (int node : g->lattice_index()) {
      if (node < 0 || node >= g->node_count()) throw DomainError("lattice cell without a graph node");
      lattice.push_back(offset + node);
    }
    offset += g->node_count();
  }
  const auto i64 = torch::TensorOptions().dtype(torch::kInt64);
  out.features = torch::tensor(features, torch::TensorOptions().dtype(torch::kFloat64)).view({offset, width}).to(dtype);
  out.src = torch::tensor(src, i64);
  out.dst = torch::tensor(dst, i64);
  out.lattice_nodes = torch::tensor(lattice, i64);
  return out;
}

GraphBatch make_graph_batch(const SceneGraph& graph, torch::Dtype dtype) {
  const SceneGraph* one[] = {&graph};
  return make_graph_batch(std::span<const SceneGraph* const>(one), dtype);
}

GatLayerImpl::GatLayerImpl(int in_features, int out_features, int heads, bool concat, double negative_slope)
    : in_(in_features), out_(out_features), heads_(heads), concat_(concat), slope_(negative_slope) {
  if (in_features < 1 || out_features < 1 || heads < 1) throw DomainError("GAT sizes must be positive");
  weight = register_parameter("weight", torch::empty({in_, heads_ * out_}));
  att_src = register_parameter("att_src", torch::empty({heads_, out_}));
  att_dst = register_parameter("att_dst", torch::empty({heads_, out_}));
  bias = register_parameter("bias", torch::zeros({output_width()}));
  torch::nn::init::xavier_uniform_(weight);
  torch::nn::init::xavier_uniform_(att_src);
  torch::nn::init::xavier_uniform_(att_dst);
}

torch::Tensor GatLayerImpl::project(const torch::Tensor& x) const {
  if (x.dim() != 2 || x.size(1) != in_) {
    throw DomainError("GAT layer expects " + std::to_string(in_) + " input features, got " +
                      (x.dim() == 2 ? std::to_string(x.size(1)) : "a non-matrix"));
  }
  return x.to(weight.scalar_type()).matmul(weight).view({x.size(0), heads_, out_});
}

GatLayerImpl::Attention GatLayerImpl::attend(const torch::Tensor& wh, const torch::Tensor& src,
                                             const torch::Tensor& dst) const {
  const auto n = wh.size(0);
  const auto loops = torch::arange(n, src.options());
  Attention a;
  a.src = torch::cat({src, loops});
  a.dst = torch::cat({dst, loops});

  const auto score_src = (wh * att_src).sum(-1);  // n x heads
  const auto score_dst = (wh * att_dst).sum(-1);
  const auto logits =
      torch::leaky_relu(score_src.index_select(0, a.src) + score_dst.index_select(0, a.dst), slope_);  // E x heads

  // Softmax over each target's incoming edges, shifted by the per-target max.
  const auto index = a.dst.unsqueeze(1).expand_as(logits);
  const auto max = torch::full({n, heads_}, -std::numeric_limits<double>::infinity(), logits.options())
                       .scatter_reduce(0, index, logits.detach(), "amax");
  const auto e = (logits - max.index_select(0, a.dst)).exp();
  const auto denom = torch::zeros({n, heads_}, logits.options()).index_add(0, a.dst, e);
  a.alpha = e / denom.index_select(0, a.dst);
  return a;
}

GatLayerImpl::Attention GatLayerImpl::attention(const torch::Tensor& x, const torch::Tensor& src,
                                                const torch::Tensor& dst) {
  return attend(project(x), src, dst);
}

torch::Tensor GatLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& src, const torch::Tensor& dst) {
  const auto wh = project(x);
  const auto a = attend(wh, src, dst);
  const auto messages = a.alpha.unsqueeze(-1) * wh.index_select(0, a.src);  // E x heads x out
  auto agg = torch::zeros_like(wh).index_add(0, a.dst, messages);
  agg = concat_ ? agg.reshape({x.size(0), heads_ * out_}) : agg.mean(1);
  return torch::elu(agg + bias);
}

torch::Tensor extract_latent_image(const torch::Tensor& embeddings, const torch::Tensor& lattice_nodes, int batch,
                                   int rows, int cols) {
  if (lattice_nodes.numel() != static_cast<std::int64_t>(batch) * rows * cols) {
    throw DomainError("lattice index does not cover every grid cell");
  }
  if (lattice_nodes.numel() > 0 &&
      (lattice_nodes.min().item<std::int64_t>() < 0 || lattice_nodes.max().item<std::int64_t>() >= embeddings.size(0))) {
    throw DomainError("lattice index refers to a missing node");
  }
  const auto c = embeddings.size(1);
  return embeddings.index_select(0, lattice_nodes).view({batch, rows, cols, c}).permute({0, 3, 1, 2}).contiguous();
}

torch::Tensor pixel_norm(const torch::Tensor& x) {
  return x * torch::rsqrt(x.pow(2).mean(1, true) + 1e-8);
}

ConditionModelImpl::ConditionModelImpl(const ModelConfig& config) : config_(config) {
  validate(config);
  int in = feature_width(config.variant);
  for (std::size_t i = 0; i < config.gat_widths.size(); ++i) {
    const bool concat = i + 1 < config.gat_widths.size();
    const int heads = config.gat_heads[i];
    const int per_head = concat ? config.gat_widths[i] / heads : config.gat_widths[i];
    gat_.push_back(register_module("gat" + std::to_string(i),
                                   GatLayer(in, per_head, heads, concat, config.gat_negative_slope)));
    in = gat_.back()->output_width();
  }
  for (std::size_t i = 0; i < config.upsample_channels.size(); ++i) {
    const int out = config.upsample_channels[i];
    up_.push_back(register_module("up" + std::to_string(i),
                                  torch::nn::ConvTranspose2d(
                                      torch::nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1))));
    in = out;
  }
  // Double precision keeps results independent of neighbour summation order.
  to(torch::kFloat64);
}

torch::Tensor ConditionModelImpl::embed(const GraphBatch& graphs) {
  if (graphs.variant != config_.variant) {
    throw DomainError("graph variant '" + std::string(to_string(graphs.variant)) + "' does not match the model's '" +
                      std::string(to_string(config_.variant)) + "'");
  }
  if (graphs.rows != config_.lattice.rows || graphs.cols != config_.lattice.cols) {
    throw DomainError("graph lattice does not match the model lattice");
  }
  auto h = graphs.features.to(gat_.front()->weight.scalar_type());
  for (auto& layer : gat_) h = layer->forward(h, graphs.src, graphs.dst);
  return h;
}

ConditionOutput ConditionModelImpl::forward(const GraphBatch& graphs) {
  const auto h = embed(graphs);
  ConditionOutput out;
  out.latent = extract_latent_image(h, graphs.lattice_nodes, graphs.batch, graphs.rows, graphs.cols);
  auto x = out.latent;
  for (auto& up : up_) x = torch::leaky_relu(pixel_norm(up->forward(x)), 0.2);
  out.omega = x;
  return out;
}

}  // namespace sgsynth
