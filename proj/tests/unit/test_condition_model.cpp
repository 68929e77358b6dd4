// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <random>

#include "sgsynth/condition_model.hpp"
#include "sgsynth/error.hpp"
#include "support/tensor_oracles.hpp"

// After torch, whose logging headers define their own CHECK.
#include <doctest.h>

using namespace sgsynth;

namespace {

std::vector<double> to_vector(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat64).contiguous();
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

torch::Tensor edges_tensor(const std::vector<int>& v) {
  return torch::tensor(std::vector<std::int64_t>(v.begin(), v.end()), torch::kInt64);
}

std::vector<SceneEntity> random_entities(std::mt19937_64& rng, int count, GraphVariant variant) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SceneEntity> out;
  for (int i = 0; i < count; ++i) {
    SceneEntity e;
    e.entity_class = kEntityClasses[static_cast<std::size_t>(u(rng) * 4) % 4];
    e.bbox = {0.15 + 0.7 * u(rng), 0.15 + 0.7 * u(rng), 0.1 + 0.1 * u(rng), 0.1 + 0.1 * u(rng)};
    if (variant == GraphVariant::Discrete) {
      e.color = DiscreteColor{palette()[static_cast<std::size_t>(u(rng) * 8) % 8]};
    } else {
      e.color = single_color_clusters({u(rng), u(rng), u(rng)});
    }
    out.push_back(e);
  }
  return out;
}

ModelConfig tiny_config(int rows, int cols) {
  ModelConfig c = toy_model_config();
  c.lattice = {rows, cols, 1};
  c.gat_widths = {8, 8, 8};
  c.gat_heads = {2, 2, 1};
  c.upsample_channels = {8, 8, 8, 8};
  return c;
}

}  // namespace

TEST_CASE("single node with identity weights returns the activation of its input") {
  torch::manual_seed(0);
  GatLayer layer(3, 3, 1, false);
  {
    torch::NoGradGuard g;
    layer->weight.copy_(torch::eye(3));
  }
  const auto x = torch::tensor({{0.5, -1.0, 2.0}}, torch::kFloat32);
  const auto empty = torch::empty({0}, torch::kInt64);
  const auto y = layer->forward(x, empty, empty);
  CHECK(torch::allclose(y, torch::elu(x), 0, 1e-7));
}

TEST_CASE("isolated nodes do not influence each other") {
  torch::manual_seed(1);
  GatLayer layer(4, 5, 2, true);
  auto x = torch::randn({2, 4});
  const auto empty = torch::empty({0}, torch::kInt64);
  const auto before = layer->forward(x, empty, empty);
  x[1].zero_();
  const auto after = layer->forward(x, empty, empty);
  CHECK(torch::equal(before[0], after[0]));
}

TEST_CASE("GAT layer matches the per-node loop oracle") {
  torch::manual_seed(2);
  std::mt19937_64 rng(2);
  for (bool concat : {true, false}) {
    GatLayer layer(5, 3, 2, concat, 0.2);
    layer->to(torch::kFloat64);
    {
      torch::NoGradGuard g;
      layer->bias.uniform_(-0.5, 0.5);
    }
    const int n = 7;
    std::vector<int> src, dst;
    std::vector<std::pair<int, int>> pairs;
    std::uniform_int_distribution<int> node(0, n - 1);
    for (int e = 0; e < 15; ++e) {
      const int s = node(rng), d = node(rng);
      if (s == d) continue;
      src.push_back(s);
      dst.push_back(d);
      pairs.emplace_back(s, d);
    }
    const auto x = torch::randn({n, 5}, torch::kFloat64);
    const auto y = layer->forward(x, edges_tensor(src), edges_tensor(dst));

    testing::GatOracleParams p;
    p.in = 5;
    p.out = 3;
    p.heads = 2;
    p.concat = concat;
    p.weight = to_vector(layer->weight);
    p.att_src = to_vector(layer->att_src);
    p.att_dst = to_vector(layer->att_dst);
    p.bias = to_vector(layer->bias);
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < n; ++i) xs.push_back(to_vector(x[i]));
    const auto expected = testing::gat_oracle(p, xs, pairs);
    for (int i = 0; i < n; ++i) {
      const auto got = to_vector(y[i]);
      REQUIRE(got.size() == expected[i].size());
      for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(expected[i][k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention over every neighbourhood sums to one") {
  torch::manual_seed(3);
  std::mt19937_64 rng(3);
  GatLayer layer(6, 4, 3, true);
  const int n = 12;
  std::vector<int> src, dst;
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int e = 0; e < 40; ++e) {
    src.push_back(node(rng));
    dst.push_back(node(rng));
  }
  const auto a = layer->attention(torch::randn({n, 6}), edges_tensor(src), edges_tensor(dst));
  const auto alpha = to_vector(a.alpha);
  const auto targets = to_vector(a.dst);
  std::vector<double> sums(static_cast<std::size_t>(n * 3), 0.0);
  for (std::size_t e = 0; e < targets.size(); ++e) {
    for (int h = 0; h < 3; ++h) sums[static_cast<std::size_t>(targets[e]) * 3 + h] += alpha[e * 3 + h];
  }
  for (double s : sums) CHECK(std::abs(s - 1.0) < 1e-6);
}

TEST_CASE("GAT rejects mismatched input width") {
  GatLayer layer(4, 2, 1, false);
  const auto empty = torch::empty({0}, torch::kInt64);
  CHECK_THROWS_AS(layer->forward(torch::zeros({3, 5}), empty, empty), DomainError);
}

TEST_CASE("latent image copies lattice embeddings into pixels") {
  const auto emb = torch::arange(6, torch::kFloat32).unsqueeze(1).repeat({1, 2});  // node i -> (i, i)
  // 2x2 lattice stored at nodes 2,3,4,5 with two entity nodes first.
  const auto index = torch::tensor(std::vector<std::int64_t>{2, 3, 4, 5});
  const auto img = extract_latent_image(emb, index, 1, 2, 2);
  REQUIRE(img.sizes() == torch::IntArrayRef({1, 2, 2, 2}));
  CHECK(img[0][0][0][0].item<float>() == 2);
  CHECK(img[0][1][0][1].item<float>() == 3);
  CHECK(img[0][0][1][0].item<float>() == 4);
  CHECK(img[0][1][1][1].item<float>() == 5);
  CHECK_THROWS_AS(extract_latent_image(emb, torch::tensor(std::vector<std::int64_t>{2, 3, 4, 9}), 1, 2, 2),
                  DomainError);
  CHECK_THROWS_AS(extract_latent_image(emb, index, 1, 3, 2), DomainError);
}

TEST_CASE("latent image equals the final grid-node embeddings") {
  std::mt19937_64 rng(4);
  const auto config = tiny_config(4, 4);
  torch::manual_seed(4);
  ConditionModel model(config);
  const auto entities = random_entities(rng, 2, config.variant);
  const auto graph = build_scene_graph(entities, encode_time(3600), config.lattice, config.variant);
  const auto batch = make_graph_batch(graph);
  const auto emb = model->embed(batch);
  const auto latent = model->forward(batch).latent;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      CHECK(torch::equal(latent[0].select(1, r).select(1, c), emb[graph.lattice_node(r, c)]));
    }
  }
}

TEST_CASE("condition output is invariant to entity order") {
  std::mt19937_64 rng(5);
  for (auto variant : {GraphVariant::Discrete, GraphVariant::Cluster}) {
    auto config = tiny_config(5, 5);
    config.variant = variant;
    torch::manual_seed(5);
    ConditionModel model(config);
    for (int trial = 0; trial < 5; ++trial) {
      auto entities = random_entities(rng, 4, variant);
      const auto a = model->forward(make_graph_batch(build_scene_graph(entities, encode_time(50000), config.lattice, variant)));
      std::shuffle(entities.begin(), entities.end(), rng);
      const auto b = model->forward(make_graph_batch(build_scene_graph(entities, encode_time(50000), config.lattice, variant)));
      CHECK((a.omega - b.omega).abs().max().item<double>() < 1e-6);
      CHECK((a.latent - b.latent).abs().max().item<double>() < 1e-6);
    }
  }
}

TEST_CASE("omega is 16 times the lattice size") {
  for (int side : {4, 20}) {
    const auto config = tiny_config(side, side);
    torch::manual_seed(6);
    ConditionModel model(config);
    const auto graph = build_scene_graph({}, encode_time(0), config.lattice, config.variant);
    const auto out = model->forward(make_graph_batch(graph));
    CHECK(out.latent.sizes() == torch::IntArrayRef({1, config.latent_channels(), side, side}));
    CHECK(out.omega.sizes() == torch::IntArrayRef({1, config.omega_channels(), side * 16, side * 16}));
  }
}

TEST_CASE("variant mismatch is rejected") {
  const auto config = tiny_config(4, 4);
  torch::manual_seed(7);
  ConditionModel model(config);
  const auto graph = build_scene_graph({}, encode_time(0), config.lattice, GraphVariant::Cluster);
  CHECK_THROWS_AS(model->forward(make_graph_batch(graph)), DomainError);
}

TEST_CASE("batched graphs give the same result as one at a time") {
  std::mt19937_64 rng(8);
  const auto config = tiny_config(4, 4);
  torch::manual_seed(8);
  ConditionModel model(config);
  const auto g1 = build_scene_graph(random_entities(rng, 1, config.variant), encode_time(100), config.lattice, config.variant);
  const auto g2 = build_scene_graph(random_entities(rng, 3, config.variant), encode_time(70000), config.lattice, config.variant);
  const SceneGraph* both[] = {&g1, &g2};
  const auto batched = model->forward(make_graph_batch(std::span<const SceneGraph* const>(both)));
  const auto one = model->forward(make_graph_batch(g1));
  const auto two = model->forward(make_graph_batch(g2));
  CHECK((batched.omega[0] - one.omega[0]).abs().max().item<double>() < 1e-6);
  CHECK((batched.omega[1] - two.omega[0]).abs().max().item<double>() < 1e-6);
}

TEST_CASE("finite differences agree with autograd on the first GAT layer") {
  std::mt19937_64 rng(9);
  const auto config = tiny_config(4, 4);
  torch::manual_seed(9);
  ConditionModel model(config);
  model->to(torch::kFloat64);
  const auto graph = build_scene_graph(random_entities(rng, 2, config.variant), encode_time(30000), config.lattice,
                                       config.variant);
  const auto batch = make_graph_batch(graph, torch::kFloat64);
  const auto probe = torch::randn({1, config.omega_channels(), 64, 64}, torch::kFloat64);
  auto loss = [&] { return (model->forward(batch).omega * probe).sum(); };

  auto& w = model->gat_layers().front()->weight;
  w.mutable_grad() = torch::Tensor();
  loss().backward();
  const auto analytic = w.grad().clone();
  CHECK(analytic.abs().max().item<double>() > 0.0);

  const double h = 1e-6;
  auto flat = w.view({-1});
  std::vector<double> a, n;
  torch::NoGradGuard no_grad;
  for (std::int64_t i = 0; i < flat.numel(); i += 7) {
    const double orig = flat[i].item<double>();
    flat[i] = orig + h;
    const double up = loss().item<double>();
    flat[i] = orig - h;
    const double down = loss().item<double>();
    flat[i] = orig;
    n.push_back((up - down) / (2 * h));
    a.push_back(analytic.view({-1})[i].item<double>());
  }
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    norm += n[i] * n[i];
  }
  CHECK(std::sqrt(diff / norm) < 1e-3);
}

TEST_CASE("one GAT layer leaves grid nodes outside an entity's radius untouched") {
  const LatticeSpec spec{6, 6, 1};
  SceneEntity e;
  e.bbox = {0.1, 0.1, 0.05, 0.05};
  const std::vector<SceneEntity> with = {e};
  const auto g_with = build_scene_graph(with, encode_time(0), spec, GraphVariant::Discrete);
  const auto g_without = build_scene_graph({}, encode_time(0), spec, GraphVariant::Discrete);
  torch::manual_seed(10);
  GatLayer layer(feature_width(GraphVariant::Discrete), 4, 2, true);
  const auto b1 = make_graph_batch(g_with);
  const auto b0 = make_graph_batch(g_without);
  const auto y1 = layer->forward(b1.features, b1.src, b1.dst);
  const auto y0 = layer->forward(b0.features, b0.src, b0.dst);
  const auto near = grid_neighbors(spec, {0.1, 0.1});
  int changed = 0;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      const bool is_near = std::find(near.begin(), near.end(), r * 6 + c) != near.end();
      const bool same = torch::equal(y1[g_with.lattice_node(r, c)], y0[g_without.lattice_node(r, c)]);
      if (!is_near) CHECK(same);
      changed += !same;
    }
  }
  CHECK(changed > 0);
}
