// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "sgsynth/dataset.hpp"
#include "sgsynth/error.hpp"
#include "sgsynth/spade.hpp"
#include "support/tensor_oracles.hpp"

// After torch, whose logging headers define their own CHECK.
#include <doctest.h>

using namespace sgsynth;

namespace {

testing::Array4 to_array(const torch::Tensor& t) {
  testing::Array4 a{static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), static_cast<int>(t.size(2)),
                    static_cast<int>(t.size(3)), {}};
  const auto c = t.to(torch::kFloat64).contiguous();
  a.v.assign(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
  return a;
}

torch::Tensor random_segmap(int n, int size, std::uint64_t seed) {
  auto gen = at::detail::createCPUGenerator(seed);
  return one_hot_segmap(torch::randint(0, kSegmentationClasses, {n, size, size}, gen, torch::kInt64));
}

}  // namespace

TEST_CASE("spade_normalize matches the elementwise oracle") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dim(1, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dim(rng), c = dim(rng), h = dim(rng) + 1, w = dim(rng) + 1;
    torch::manual_seed(trial);
    const auto x = torch::randn({n, c, h, w}, torch::kFloat64) * 3 + 1;
    const auto gamma = torch::randn({n, c, h, w}, torch::kFloat64);
    const auto beta = torch::randn({n, c, h, w}, torch::kFloat64);
    const auto got = to_array(spade_normalize(x, gamma, beta));
    const auto expected = testing::spade_oracle(to_array(x), to_array(gamma), to_array(beta), kSpadeEpsilon);
    for (std::size_t i = 0; i < got.v.size(); ++i) worst = std::max(worst, std::abs(got.v[i] - expected.v[i]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("unit gamma and zero beta standardize each channel") {
  torch::manual_seed(2);
  const auto x = torch::randn({3, 4, 6, 5}) * 5 + 2;
  const auto y = spade_normalize(x, torch::ones_like(x), torch::zeros_like(x)).to(torch::kFloat64);
  const auto mean = y.mean({0, 2, 3});
  const auto std = (y - y.mean({0, 2, 3}, true)).pow(2).mean({0, 2, 3}).sqrt();
  CHECK(mean.abs().max().item<double>() < 1e-4);
  CHECK((std - 1).abs().max().item<double>() < 1e-4);
}

TEST_CASE("constant channels reduce to beta") {
  const auto x = torch::full({2, 3, 4, 4}, 7.0);
  torch::manual_seed(3);
  const auto gamma = torch::randn({2, 3, 4, 4});
  const auto beta = torch::randn({2, 3, 4, 4});
  const auto y = spade_normalize(x, gamma, beta);
  CHECK(torch::allclose(y, beta));
  // The gradient stays finite on degenerate channels.
  auto xr = x.clone().requires_grad_(true);
  spade_normalize(xr, gamma, beta).sum().backward();
  CHECK(torch::isfinite(xr.grad()).all().item<bool>());
}

TEST_CASE("spade_normalize rejects mismatched modulation") {
  const auto x = torch::zeros({1, 3, 4, 4});
  CHECK_THROWS_AS(spade_normalize(x, torch::ones({1, 3, 4, 5}), torch::zeros({1, 3, 4, 4})), DomainError);
  CHECK_THROWS_AS(spade_normalize(x, torch::ones({1, 2, 4, 4}), torch::zeros({1, 3, 4, 4})), DomainError);
  CHECK_THROWS_AS(spade_normalize(torch::zeros({3, 4, 4}), torch::ones({1, 3, 4, 4}), torch::zeros({1, 3, 4, 4})),
                  DomainError);
}

TEST_CASE("condition rescaling averages when shrinking") {
  const auto x = torch::arange(16, torch::kFloat32).view({1, 1, 4, 4});
  const auto y = rescale_condition(x, 2, 2);
  CHECK(y[0][0][0][0].item<float>() == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
  CHECK(rescale_condition(x, 8, 8).sizes() == torch::IntArrayRef({1, 1, 8, 8}));
}

TEST_CASE("one-hot segmaps have five channels summing to one") {
  const auto labels = torch::tensor(std::vector<std::int64_t>{0, 1, 2, 3, 4, 0}).view({1, 2, 3});
  const auto oh = one_hot_segmap(labels);
  CHECK(oh.sizes() == torch::IntArrayRef({1, 5, 2, 3}));
  CHECK(torch::equal(oh.sum(1), torch::ones({1, 2, 3})));
  CHECK(oh[0][3][1][0].item<float>() == 1.0f);
}

TEST_CASE("toy generator output shape, range and determinism") {
  const auto config = toy_model_config();
  torch::manual_seed(4);
  Generator g(config);
  const auto seg = random_segmap(2, 64, 4);
  const auto omega = torch::randn({2, config.omega_channels(), 64, 64});
  const auto noise = torch::randn({2, config.noise_dim});
  const auto a = g->forward(seg, omega, noise);
  CHECK(a.sizes() == torch::IntArrayRef({2, 3, 64, 64}));
  CHECK(a.abs().max().item<double>() <= 1.0);
  CHECK(torch::equal(a, g->forward(seg, omega, noise)));

  const auto other = g->forward(seg, torch::randn({2, config.omega_channels(), 64, 64}), noise);
  CHECK((a - other).abs().sum().item<double>() > 0.0);
}

TEST_CASE("generator rejects mismatched resolutions") {
  const auto config = toy_model_config();
  torch::manual_seed(5);
  Generator g(config);
  CHECK_THROWS_AS(g->forward(random_segmap(1, 32, 5), torch::randn({1, config.omega_channels(), 64, 64}),
                             torch::randn({1, config.noise_dim})),
                  DomainError);
  CHECK_THROWS_AS(g->forward(random_segmap(1, 64, 5), torch::randn({1, 3, 64, 64}), torch::randn({1, config.noise_dim})),
                  DomainError);
}

TEST_CASE("discriminator scores two scales and is fully convolutional") {
  const auto config = toy_model_config();
  torch::manual_seed(6);
  MultiscaleDiscriminator d(config);
  const int ch = config.discriminator_input_channels();
  const auto x = torch::randn({2, ch, 64, 64});
  const auto out = d->forward(x);
  REQUIRE(out.size() == 2);
  const auto s0 = out[0].back();
  const auto s1 = out[1].back();
  CHECK(s0.size(1) == 1);
  CHECK(s0.size(2) < 64);
  CHECK(s1.size(2) < s0.size(2));

  const auto tall = d->forward(torch::randn({2, ch, 128, 64}));
  CHECK(tall[0].back().size(2) == 2 * s0.size(2));
  CHECK(tall[1].back().size(2) == 2 * s1.size(2));
  CHECK(tall[0].back().size(3) == s0.size(3));

  const auto again = d->forward(x);
  CHECK(torch::equal(again[0].back(), s0));
  CHECK_THROWS_AS(d->forward(torch::randn({1, ch + 1, 64, 64})), DomainError);
}

TEST_CASE("discriminator batch pairs each real with a fake along the height") {
  const int c = 6;
  torch::manual_seed(7);
  const DiscriminatorSide reals{torch::randn({2, 3, 16, 16}), random_segmap(2, 16, 7), torch::randn({2, c, 4, 4})};
  const DiscriminatorSide fakes{torch::randn({1, 3, 16, 16}), random_segmap(1, 16, 8), torch::randn({1, c, 4, 4})};
  const auto x = assemble_discriminator_batch(reals, fakes);
  CHECK(x.sizes() == torch::IntArrayRef({2, 3 + 5 + c, 32, 16}));
  const auto [top, bottom] = split_fake_real(x);
  const auto fake_slice = discriminator_slices(fakes);
  const auto real_slice = discriminator_slices(reals);
  CHECK(torch::equal(top[0], fake_slice[0]));
  CHECK(torch::equal(top[1], fake_slice[0]));
  CHECK(torch::equal(bottom[0], real_slice[0]));
  CHECK(torch::equal(bottom[1], real_slice[1]));
  // The latent image is upsampled by pixel replication.
  CHECK(torch::equal(bottom[0][8][3], bottom[0][8][0]));

  const DiscriminatorSide two_fakes{torch::randn({2, 3, 16, 16}), random_segmap(2, 16, 9), torch::randn({2, c, 4, 4})};
  CHECK_THROWS_AS(assemble_discriminator_batch(reals, two_fakes), DomainError);
}

TEST_CASE("discriminator input channels are image + segmap + latent") {
  for (int latent : {1, 8, 16, 64}) {
    ModelConfig c = toy_model_config();
    c.gat_widths = {latent * 4, latent * 4, latent};
    CHECK(c.discriminator_input_channels() == 3 + 5 + latent);
    c.use_graph = false;
    CHECK(c.discriminator_input_channels() == 8);
  }
}
