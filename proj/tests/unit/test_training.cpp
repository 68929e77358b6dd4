// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "sgsynth/error.hpp"
#include "sgsynth/model.hpp"
#include "sgsynth/synthetic.hpp"
#include "support/temp_dir.hpp"

// After torch, whose logging headers define their own CHECK.
#include <doctest.h>

using namespace sgsynth;

namespace {

std::vector<DataPoint> toy_data(int count, std::uint64_t seed = 0) {
  SyntheticOptions o;
  o.count = count;
  o.seed = seed;
  return synthesize_dataset(o);
}

std::map<std::string, torch::Tensor> snapshot(const Model& m) {
  std::map<std::string, torch::Tensor> out;
  for (const auto& [name, p] : m.named_parameters()) out[name] = p.detach().clone();
  return out;
}

bool bit_identical(const std::map<std::string, torch::Tensor>& a, const Model& m) {
  for (const auto& [name, p] : m.named_parameters()) {
    if (!torch::equal(a.at(name), p)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("synthetic toy data matches the toy model") {
  const auto data = toy_data(4);
  REQUIRE(data.size() == 4);
  CHECK(data[0].image.height == 64);
  CHECK(data[0].graph.lattice() == toy_model_config().lattice);
  const auto batch = make_tensor_batch(data, toy_model_config());
  CHECK(batch.images.sizes() == torch::IntArrayRef({4, 3, 64, 64}));
  CHECK(batch.images.min().item<double>() >= -1.0);
  CHECK(batch.images.max().item<double>() <= 1.0);
  CHECK(batch.graphs.batch == 4);
}

TEST_CASE("image tensors round-trip exactly") {
  const auto data = toy_data(1, 3);
  CHECK(tensor_to_image(image_to_tensor(data[0].image)) == data[0].image);
}

TEST_CASE("a training step gives finite losses, updates the generator and reaches the GAT") {
  const auto data = toy_data(4);
  TrainState state(toy_model_config(), toy_train_config());
  const auto before = snapshot(state.model());
  const auto report = state.train_step(data);
  CHECK(std::isfinite(report.d_real));
  CHECK(std::isfinite(report.d_fake));
  CHECK(std::isfinite(report.g_total));
  CHECK(report.gat_grad_norm > 0.0);
  CHECK(state.step() == 1);
  CHECK(!torch::equal(before.at("generator.to_rgb.weight"), state.model().generator->named_parameters()["to_rgb.weight"]));
  CHECK(!torch::equal(before.at("condition.gat0.weight"), state.model().condition->named_parameters()["gat0.weight"]));
}

TEST_CASE("batches must hold an even number of images") {
  const auto data = toy_data(3);
  TrainState state(toy_model_config(), toy_train_config());
  CHECK_THROWS_AS(state.train_step(data), DomainError);
  CHECK_THROWS_AS(state.train_step(std::span<const DataPoint>(data).first(1)), DomainError);
}

TEST_CASE("zero learning rates leave every parameter bit-identical") {
  auto tc = toy_train_config();
  tc.generator_lr = 0.0;
  tc.discriminator_lr = 0.0;
  const auto data = toy_data(4);
  TrainState state(toy_model_config(), tc);
  const auto before = snapshot(state.model());
  state.train_step(data);
  CHECK(bit_identical(before, state.model()));
}

TEST_CASE("gradients reach every trainable tensor") {
  const auto data = toy_data(4, 1);
  Model model(toy_model_config(), 2);
  const auto batch = make_tensor_batch(data, model.config);
  const auto noise = seeded_noise(0, 2, model.config.noise_dim);

  // The real-side term alone: at initialization the two hinge halves cancel
  // exactly on the score-layer bias.
  const auto d = discriminator_losses(model, batch, noise);
  d.d_real.backward();
  for (const auto& item : model.discriminator->named_parameters()) {
    INFO(item.key());
    CHECK((item.value().grad().defined() && item.value().grad().abs().sum().item<double>() > 0.0));
  }

  const auto g = generator_losses(model, batch, noise, toy_train_config());
  (g.g_adversarial + 10.0 * g.g_feature_matching).backward();
  for (const auto* module : {static_cast<torch::nn::Module*>(model.generator.get()),
                             static_cast<torch::nn::Module*>(model.condition.get())}) {
    for (const auto& item : module->named_parameters()) {
      INFO(item.key());
      CHECK((item.value().grad().defined() && item.value().grad().abs().sum().item<double>() > 0.0));
    }
  }
}

TEST_CASE("non-finite losses raise a training error with the step") {
  const auto data = toy_data(4);
  TrainState state(toy_model_config(), toy_train_config());
  state.train_step(data);
  {
    torch::NoGradGuard g;
    state.model().generator->named_parameters()["to_rgb.bias"].fill_(std::numeric_limits<float>::quiet_NaN());
  }
  try {
    state.train_step(data);
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    CHECK(e.step() == 1);
  }
}

TEST_CASE("checkpoints restore bit-identical parameters, outputs and optimizer state") {
  testing::TempDir dir;
  const auto data = toy_data(4, 5);
  TrainState state(toy_model_config(), toy_train_config());
  state.train_step(data);
  state.train_step(data);
  const auto path = dir.path() / "state.ckpt";
  state.save(path);

  auto loaded = TrainState::load(path);
  CHECK(loaded.step() == 2);
  CHECK(loaded.train_config() == state.train_config());
  CHECK(loaded.model().config == state.model().config);
  CHECK(bit_identical(snapshot(state.model()), loaded.model()));

  SceneEntity car;
  car.bbox = {0.4, 0.5, 0.2, 0.15};
  car.color = DiscreteColor{PaletteColor::Red};
  const std::vector<SceneEntity> scene = {car};
  CHECK(generate_image(state.model(), scene, encode_time(43200), 9) ==
        generate_image(loaded.model(), scene, encode_time(43200), 9));

  // Resuming continues exactly where the original would have gone.
  state.train_step(data);
  loaded.train_step(data);
  CHECK(bit_identical(snapshot(state.model()), loaded.model()));

  std::ofstream(dir.path() / "junk.ckpt") << "not a checkpoint";
  CHECK_THROWS_AS(TrainState::load(dir.path() / "junk.ckpt"), IoError);
}

TEST_CASE("generation is deterministic and conditioned on time and color") {
  Model model(toy_model_config(), 3);
  const auto empty = generate_image(model, {}, encode_time(parse_time_of_day("12:00")), 0);
  CHECK(empty.height == 64);
  CHECK(empty.width == 64);
  CHECK(empty == generate_image(model, {}, encode_time(parse_time_of_day("12:00")), 0));

  SceneEntity car;
  car.bbox = {0.3, 0.5, 0.25, 0.2};
  car.color = DiscreteColor{PaletteColor::Blue};
  std::vector<SceneEntity> scene = {car, car};
  scene[1].bbox.x = 0.7;
  const auto night = generate_image(model, scene, encode_time(parse_time_of_day("02:00")), 1);
  const auto day = generate_image(model, scene, encode_time(parse_time_of_day("14:00")), 1);
  CHECK(night.data != day.data);
  scene[0].color = DiscreteColor{PaletteColor::Yellow};
  CHECK(generate_image(model, scene, encode_time(parse_time_of_day("14:00")), 1).data != day.data);

  SceneEntity clustered = car;
  clustered.color = single_color_clusters({1, 0, 0});
  const std::vector<SceneEntity> wrong = {clustered};
  CHECK_THROWS_AS(generate_image(model, wrong, encode_time(0), 0), DomainError);
}

TEST_CASE("model summary reports a positive overhead over the baseline") {
  const auto s = summarize(toy_model_config());
  CHECK(s.condition_parameters > 0);
  CHECK(s.baseline_total() > 0);
  CHECK(s.overhead() > 0.0);
  CHECK(s.total() - s.baseline_total() > s.condition_parameters);
  const auto j = to_json(s);
  CHECK(j["parameter_overhead"].get<double>() == doctest::Approx(s.overhead()));
}

TEST_CASE("baseline model trains and generates without a condition model") {
  auto config = toy_model_config();
  config.use_graph = false;
  TrainState state(config, toy_train_config());
  const auto report = state.train_step(toy_data(4));
  CHECK(std::isfinite(report.g_total));
  CHECK(generate_image(state.model(), {}, encode_time(0), 0).height == 64);
}

TEST_CASE("model evaluation report is complete and deterministic") {
  const auto test = toy_data(10, 7);
  Model model(toy_model_config(), 4);
  const RandomProjectionExtractor extractor(8, 1);
  const ReferenceSegmenter segmenter;
  const auto a = to_json(evaluate_model(model, test, extractor, segmenter));
  const auto b = to_json(evaluate_model(model, test, extractor, segmenter));
  CHECK(a == b);
  CHECK(a["FID"].get<double>() >= 0.0);
  CHECK(a["evaluated_images"] == 10);
  CHECK(a["mIoU"].contains("car"));
  CHECK(a["Accu."].contains("person"));
  CHECK(!a["mIoU"].contains("background"));
  CHECK(!a["mIoU"].contains("bus"));
}

TEST_CASE("model and train configs round-trip through JSON") {
  const auto mc = toy_model_config(GraphVariant::Cluster);
  CHECK(model_config_from_json(to_json(mc)) == mc);
  const auto tc = toy_train_config();
  CHECK(train_config_from_json(to_json(tc)) == tc);
  CHECK_THROWS_AS(model_config_from_json({{"bogus", 1}}), DomainError);
  auto bad = to_json(mc);
  bad["image_size"] = 100;
  CHECK_THROWS_AS(model_config_from_json(bad), DomainError);
  CHECK_THROWS_AS(train_config_from_json({{"batch_size", 3}}), DomainError);
}
