// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

torch::Dtype parameter_dtype(const Model& model) {
  return model.generator->parameters().front().scalar_type();
}

torch::Tensor every_other(const torch::Tensor& t) {
  if (!t.defined()) return t;
  return t.index_select(0, torch::arange(0, t.size(0), 2, torch::kInt64));
}

// Hinge terms averaged over scales; fake rows sit on top of each slice.
void score_losses(const std::vector<std::vector<torch::Tensor>>& outputs, torch::Tensor* d_real,
                  torch::Tensor* d_fake, torch::Tensor* g_adv, torch::Tensor* g_fm) {
  const double scales = static_cast<double>(outputs.size());
  for (const auto& features : outputs) {
    const auto [fake, real] = split_fake_real(features.back());
    if (d_real) *d_real = *d_real + torch::relu(1.0 - real).mean() / scales;
    if (d_fake) *d_fake = *d_fake + torch::relu(1.0 + fake).mean() / scales;
    if (g_adv) *g_adv = *g_adv - fake.mean() / scales;
    if (g_fm) {
      for (std::size_t i = 0; i + 1 < features.size(); ++i) {
        const auto [f, r] = split_fake_real(features[i]);
        *g_fm = *g_fm + torch::l1_loss(f, r.detach()) / scales;
      }
    }
  }
}

struct Forward {
  ConditionOutput condition;
  torch::Tensor fakes;
};

Forward run_generator(Model& model, const TensorBatch& batch, const torch::Tensor& noise) {
  Forward f;
  if (model.condition) f.condition = model.condition->forward(batch.graphs);
  f.fakes = model.generator->forward(every_other(batch.segmaps), every_other(f.condition.omega), noise);
  return f;
}

torch::Tensor assemble(const TensorBatch& batch, const Forward& f, bool detach) {
  auto latents = f.condition.latent;
  auto fakes = f.fakes;
  if (detach && latents.defined()) latents = latents.detach();
  if (detach) fakes = fakes.detach();
  const DiscriminatorSide reals{batch.images, batch.segmaps, latents};
  const DiscriminatorSide fake_side{fakes, every_other(batch.segmaps), every_other(latents)};
  return assemble_discriminator_batch(reals, fake_side);
}

void check_finite(const torch::Tensor& t, const char* what, std::int64_t step) {
  if (!std::isfinite(t.item<double>())) {
    throw TrainingError(step, std::string(what) + " is not finite");
  }
}

std::int64_t count(const std::vector<torch::Tensor>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.numel();
  return n;
}

// Checkpoint archive: 8-byte magic, u64 header size, JSON header, raw tensor bytes.
constexpr char kMagic[8] = {'S', 'G', 'S', 'Y', 'N', 'C', 'K', 'P'};
constexpr int kCheckpointVersion = 1;

const char* dtype_name(torch::Dtype t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    default: throw DomainError("unsupported tensor dtype in checkpoint");
  }
}

torch::Dtype parse_dtype(const std::string& s) {
  if (s == "float32") return torch::kFloat32;
  if (s == "float64") return torch::kFloat64;
  if (s == "int64") return torch::kInt64;
  throw DomainError("unknown tensor dtype '" + s + "'");
}

}  // namespace

Model::Model(const ModelConfig& c, std::uint64_t seed) : config(c) {
  validate(config);
  torch::manual_seed(seed);
  if (config.use_graph) condition = ConditionModel(config);
  generator = Generator(config);
  discriminator = MultiscaleDiscriminator(config);
}

std::vector<torch::Tensor> Model::generator_side_parameters() const {
  auto params = generator->parameters();
  if (condition) {
    const auto extra = condition->parameters();
    params.insert(params.end(), extra.begin(), extra.end());
  }
  return params;
}

std::vector<std::pair<std::string, torch::Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  auto add = [&](const std::string& prefix, const torch::nn::Module& m) {
    for (const auto& item : m.named_parameters()) out.emplace_back(prefix + item.key(), item.value());
  };
  if (condition) add("condition.", *condition);
  add("generator.", *generator);
  add("discriminator.", *discriminator);
  return out;
}

torch::Tensor image_to_tensor(const RgbImage& image) {
  auto t = torch::from_blob(const_cast<std::uint8_t*>(image.data.data()), {image.height, image.width, 3}, torch::kUInt8);
  return t.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).contiguous();
}

RgbImage tensor_to_image(const torch::Tensor& chw) {
  if (chw.dim() != 3 || chw.size(0) != 3) throw DomainError("expected a 3 x H x W tensor");
  const auto bytes =
      chw.detach().to(torch::kFloat64).add(1.0).mul(127.5).round().clamp(0, 255).to(torch::kUInt8).permute({1, 2, 0})
          .contiguous();
  RgbImage img(static_cast<int>(chw.size(1)), static_cast<int>(chw.size(2)));
  std::memcpy(img.data.data(), bytes.data_ptr<std::uint8_t>(), img.data.size());
  return img;
}

torch::Tensor seeded_noise(std::uint64_t seed, std::int64_t count, int dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> values(static_cast<std::size_t>(count * dim));
  for (auto& v : values) v = static_cast<float>(normal(rng));
  return torch::tensor(values).view({count, dim});
}

TensorBatch make_tensor_batch(std::span<const DataPoint> points, const ModelConfig& config) {
  if (points.empty()) throw DomainError("empty batch");
  const int s = config.image_size;
  std::vector<torch::Tensor> images, labels;
  std::vector<const SceneGraph*> graphs;
  for (const auto& p : points) {
    if (p.image.height != s || p.image.width != s || p.segmap.height != s || p.segmap.width != s) {
      throw DomainError("data point is " + std::to_string(p.image.width) + "x" + std::to_string(p.image.height) +
                        " but the model expects " + std::to_string(s) + "x" + std::to_string(s));
    }
    images.push_back(image_to_tensor(p.image));
    labels.push_back(torch::tensor(std::vector<std::int64_t>(p.segmap.labels.begin(), p.segmap.labels.end()))
                         .view({s, s}));
    graphs.push_back(&p.graph);
  }
  TensorBatch b;
  b.images = torch::stack(images);
  b.segmaps = one_hot_segmap(torch::stack(labels));
  if (config.use_graph) b.graphs = make_graph_batch(graphs);
  return b;
}

nlohmann::json to_json(const LossReport& r) {
  return {{"step", r.step},
          {"d_real", r.d_real},
          {"d_fake", r.d_fake},
          {"g_adversarial", r.g_adversarial},
          {"g_feature_matching", r.g_feature_matching},
          {"g_total", r.g_total},
          {"gat_grad_norm", r.gat_grad_norm}};
}

StepLosses discriminator_losses(Model& model, const TensorBatch& batch, const torch::Tensor& noise) {
  Forward f;
  {
    torch::NoGradGuard no_grad;
    f = run_generator(model, batch, noise);
  }
  const auto outputs = model.discriminator->forward(assemble(batch, f, true));
  StepLosses l;
  l.d_real = torch::zeros({});
  l.d_fake = torch::zeros({});
  score_losses(outputs, &l.d_real, &l.d_fake, nullptr, nullptr);
  return l;
}

StepLosses generator_losses(Model& model, const TensorBatch& batch, const torch::Tensor& noise,
                            const TrainConfig&) {
  const auto f = run_generator(model, batch, noise);
  const auto outputs = model.discriminator->forward(assemble(batch, f, false));
  StepLosses l;
  l.g_adversarial = torch::zeros({});
  l.g_feature_matching = torch::zeros({});
  score_losses(outputs, nullptr, nullptr, &l.g_adversarial, &l.g_feature_matching);
  return l;
}

TrainState::TrainState(const ModelConfig& model_config, const TrainConfig& train_config)
    : TrainState(std::make_unique<Model>(model_config, train_config.seed), train_config, 0) {}

TrainState::TrainState(std::unique_ptr<Model> model, const TrainConfig& train_config, std::int64_t step)
    : model_(std::move(model)), train_(train_config), step_(step) {
  validate(train_);
  make_optimizers();
}

void TrainState::make_optimizers() {
  opt_g_ = std::make_unique<torch::optim::Adam>(
      model_->generator_side_parameters(),
      torch::optim::AdamOptions(train_.generator_lr).betas({train_.beta1, train_.beta2}));
  opt_d_ = std::make_unique<torch::optim::Adam>(
      model_->discriminator->parameters(),
      torch::optim::AdamOptions(train_.discriminator_lr).betas({train_.beta1, train_.beta2}));
}

LossReport TrainState::train_step(std::span<const DataPoint> batch) {
  if (batch.size() < 2 || batch.size() % 2 != 0) {
    throw DomainError("a training batch needs an even number (>= 2) of images, got " + std::to_string(batch.size()));
  }
  Model& m = *model_;
  const auto tb = make_tensor_batch(batch, m.config);
  const auto k = static_cast<std::int64_t>(batch.size() / 2);
  const auto noise = seeded_noise(mix_seed(train_.seed, static_cast<std::uint64_t>(step_)), k, m.config.noise_dim);

  LossReport report;
  report.step = step_;

  const auto d = discriminator_losses(m, tb, noise);
  const auto d_loss = d.d_real + d.d_fake;
  check_finite(d_loss, "discriminator loss", step_);
  opt_d_->zero_grad();
  d_loss.backward();
  opt_d_->step();
  report.d_real = d.d_real.item<double>();
  report.d_fake = d.d_fake.item<double>();

  const auto g = generator_losses(m, tb, noise, train_);
  const auto g_loss = train_.gan_weight * g.g_adversarial + train_.feature_matching_weight * g.g_feature_matching;
  check_finite(g_loss, "generator loss", step_);
  opt_g_->zero_grad();
  g_loss.backward();
  if (m.condition) {
    const auto& grad = m.condition->gat_layers().front()->weight.grad();
    report.gat_grad_norm = grad.defined() ? grad.norm().item<double>() : 0.0;
  }
  opt_g_->step();
  m.discriminator->zero_grad();
  report.g_adversarial = g.g_adversarial.item<double>();
  report.g_feature_matching = g.g_feature_matching.item<double>();
  report.g_total = g_loss.item<double>();

  ++step_;
  return report;
}

void TrainState::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["format"] = "sgsynth-checkpoint";
  header["version"] = kCheckpointVersion;
  header["model_config"] = to_json(model_->config);
  header["train_config"] = to_json(train_);
  header["step"] = step_;
  header["tensors"] = nlohmann::json::array();

  std::vector<torch::Tensor> blobs;
  std::uint64_t offset = 0;
  auto add = [&](const std::string& name, const torch::Tensor& t) {
    auto c = t.detach().cpu().contiguous();
    const auto bytes = static_cast<std::uint64_t>(c.numel() * c.element_size());
    header["tensors"].push_back(
        {{"name", name}, {"dtype", dtype_name(c.scalar_type())}, {"shape", c.sizes().vec()}, {"offset", offset},
         {"bytes", bytes}});
    offset += bytes;
    blobs.push_back(c);
  };
  const auto named = model_->named_parameters();
  for (const auto& [name, p] : named) add("param/" + name, p);
  auto add_adam = [&](const char* prefix, torch::optim::Adam& opt) {
    nlohmann::json steps = nlohmann::json::object();
    for (const auto& [name, p] : named) {
      const auto it = opt.state().find(p.unsafeGetTensorImpl());
      if (it == opt.state().end()) continue;
      const auto& st = static_cast<const torch::optim::AdamParamState&>(*it->second);
      steps[name] = st.step();
      add(std::string(prefix) + "/exp_avg/" + name, st.exp_avg());
      add(std::string(prefix) + "/exp_avg_sq/" + name, st.exp_avg_sq());
    }
    header[std::string(prefix) + "_steps"] = steps;
  };
  add_adam("adam_g", *opt_g_);
  add_adam("adam_d", *opt_d_);

  const auto text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open checkpoint for writing");
  const std::uint64_t size = text.size();
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&size), sizeof size);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& b : blobs) {
    out.write(static_cast<const char*>(b.data_ptr()), static_cast<std::streamsize>(b.numel() * b.element_size()));
  }
  if (!out) throw IoError(path, "failed writing checkpoint");
}

TrainState TrainState::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open checkpoint");
  char magic[8];
  std::uint64_t size = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&size), sizeof size);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError(path, "not a checkpoint file");
  std::string text(size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(size));
  if (!in) throw IoError(path, "truncated checkpoint header");

  nlohmann::json header;
  ModelConfig mc;
  TrainConfig tc;
  try {
    header = nlohmann::json::parse(text);
    if (header.at("format") != "sgsynth-checkpoint") throw IoError(path, "not a checkpoint file");
    if (header.at("version").get<int>() != kCheckpointVersion) {
      throw IoError(path, "unsupported checkpoint version " + header.at("version").dump());
    }
    mc = model_config_from_json(header.at("model_config"));
    tc = train_config_from_json(header.at("train_config"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("malformed checkpoint header: ") + e.what());
  } catch (const DomainError& e) {
    throw IoError(path, std::string("invalid checkpoint config: ") + e.what());
  }

  std::map<std::string, torch::Tensor> tensors;
  const auto base = in.tellg();
  for (const auto& entry : header.at("tensors")) {
    const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(parse_dtype(entry.at("dtype").get<std::string>())));
    const auto bytes = entry.at("bytes").get<std::uint64_t>();
    if (bytes != static_cast<std::uint64_t>(t.numel() * t.element_size())) throw IoError(path, "tensor size mismatch");
    in.seekg(base + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError(path, "truncated tensor data for " + entry.at("name").get<std::string>());
    tensors[entry.at("name").get<std::string>()] = t;
  }

  auto model = std::make_unique<Model>(mc, tc.seed);
  const auto named = model->named_parameters();
  {
    torch::NoGradGuard no_grad;
    for (const auto& [name, p] : named) {
      const auto it = tensors.find("param/" + name);
      if (it == tensors.end()) throw IoError(path, "checkpoint lacks parameter " + name);
      if (it->second.sizes() != p.sizes()) throw IoError(path, "shape mismatch for parameter " + name);
      p.copy_(it->second);
    }
  }
  TrainState state(std::move(model), tc, header.at("step").get<std::int64_t>());
  auto restore = [&](const char* prefix, torch::optim::Adam& opt) {
    const auto& steps = header.value(std::string(prefix) + "_steps", nlohmann::json::object());
    for (const auto& [name, p] : named) {
      if (!steps.contains(name)) continue;
      auto st = std::make_unique<torch::optim::AdamParamState>();
      st->step(steps.at(name).get<std::int64_t>());
      st->exp_avg(tensors.at(std::string(prefix) + "/exp_avg/" + name));
      st->exp_avg_sq(tensors.at(std::string(prefix) + "/exp_avg_sq/" + name));
      opt.state()[p.unsafeGetTensorImpl()] = std::move(st);
    }
  };
  restore("adam_g", *state.opt_g_);
  restore("adam_d", *state.opt_d_);
  return state;
}

RgbImage generate_from_condition(Model& model, const SceneGraph& graph, const SegmentationMap& segmap,
                                 std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  const int s = model.config.image_size;
  if (segmap.height != s || segmap.width != s) throw DomainError("segmentation map does not match the model resolution");
  const auto dtype = parameter_dtype(model);
  torch::Tensor omega;
  if (model.condition) {
    if (graph.variant() != model.config.variant) {
      throw DomainError("scene uses the " + std::string(to_string(graph.variant())) +
                        " variant but the model was built for " + std::string(to_string(model.config.variant)));
    }
    omega = model.condition->forward(make_graph_batch(graph)).omega;
  }
  const auto labels =
      torch::tensor(std::vector<std::int64_t>(segmap.labels.begin(), segmap.labels.end())).view({1, s, s});
  const auto noise = seeded_noise(seed, 1, model.config.noise_dim).to(dtype);
  const auto out = model.generator->forward(one_hot_segmap(labels).to(dtype), omega, noise);
  return tensor_to_image(out[0]);
}

RgbImage generate_image(Model& model, std::span<const SceneEntity> entities, const TimeEncoding& time,
                        std::uint64_t seed) {
  for (const auto& e : entities) {
    validate(e);
    if (variant_of(e.color) != model.config.variant) {
      throw DomainError("entity color is " + std::string(to_string(variant_of(e.color))) +
                        " but the model was built for the " + std::string(to_string(model.config.variant)) +
                        " variant");
    }
  }
  const int s = model.config.image_size;
  const auto graph = build_scene_graph(entities, time, model.config.lattice, model.config.variant);
  return generate_from_condition(model, graph, rasterize_scene(entities, s, s), seed);
}

double ModelSummary::overhead() const {
  return static_cast<double>(total() - baseline_total()) / static_cast<double>(baseline_total());
}

ModelSummary summarize(const ModelConfig& config) {
  ModelConfig baseline_config = config;
  baseline_config.use_graph = false;
  const Model full(config);
  const Model baseline(baseline_config);
  ModelSummary s;
  s.condition_parameters = full.condition ? count(full.condition->parameters()) : 0;
  s.generator_parameters = count(full.generator->parameters());
  s.discriminator_parameters = count(full.discriminator->parameters());
  s.baseline_generator_parameters = count(baseline.generator->parameters());
  s.baseline_discriminator_parameters = count(baseline.discriminator->parameters());
  return s;
}

nlohmann::json to_json(const ModelSummary& s) {
  return {{"condition_parameters", s.condition_parameters},
          {"generator_parameters", s.generator_parameters},
          {"discriminator_parameters", s.discriminator_parameters},
          {"total_parameters", s.total()},
          {"baseline_generator_parameters", s.baseline_generator_parameters},
          {"baseline_discriminator_parameters", s.baseline_discriminator_parameters},
          {"baseline_total_parameters", s.baseline_total()},
          {"parameter_overhead", s.overhead()}};
}

EvalReport evaluate_model(Model& model, std::span<const DataPoint> test, const FeatureExtractor& extractor,
                          const Segmenter& segmenter, const EvaluationOptions& options) {
  std::vector<RgbImage> generated;
  std::vector<DataPoint> kept;
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < test.size(); ++i) {
    try {
      generated.push_back(generate_from_condition(model, test[i].graph, test[i].segmap, mix_seed(options.seed, i)));
      kept.push_back(test[i]);
    } catch (const std::exception& e) {
      failures.push_back("test point " + std::to_string(i) + ": " + e.what());
    }
  }
  if (kept.empty()) throw DomainError("no test point could be generated");
  const auto classes = evaluated_classes(options.include_bus);
  auto report = score_generated(generated, kept, extractor, segmenter, classes);
  report.failures = std::move(failures);
  report.excluded = report.failures.size();
  return report;
}

TorchScriptExtractor::TorchScriptExtractor(const std::filesystem::path& path, int input_size)
    : path_(path), input_size_(input_size) {
  try {
    module_ = torch::jit::load(path.string());
  } catch (const c10::Error& e) {
    throw IoError(path, std::string("cannot load TorchScript extractor: ") + e.what_without_backtrace());
  }
  module_.eval();
  RgbImage probe(input_size, input_size);
  dim_ = static_cast<int>(embed(probe).size());
}

std::vector<double> TorchScriptExtractor::embed(const RgbImage& image) const {
  torch::NoGradGuard no_grad;
  const auto resized = resize(image, input_size_, input_size_);
  const auto x = image_to_tensor(resized).add(1.0).div(2.0).unsqueeze(0);
  const auto y = module_.forward({x}).toTensor().to(torch::kFloat64).contiguous().view({-1});
  return {y.data_ptr<double>(), y.data_ptr<double>() + y.numel()};
}

TorchScriptSegmenter::TorchScriptSegmenter(const std::filesystem::path& path) : path_(path) {
  try {
    module_ = torch::jit::load(path.string());
  } catch (const c10::Error& e) {
    throw IoError(path, std::string("cannot load TorchScript segmenter: ") + e.what_without_backtrace());
  }
  module_.eval();
}

SegmentationMap TorchScriptSegmenter::segment(const RgbImage& generated, const DataPoint&, std::size_t) const {
  torch::NoGradGuard no_grad;
  const auto x = image_to_tensor(generated).add(1.0).div(2.0).unsqueeze(0);
  const auto scores = module_.forward({x}).toTensor();
  if (scores.dim() != 4 || scores.size(1) != kSegmentationClasses || scores.size(2) != generated.height ||
      scores.size(3) != generated.width) {
    throw DomainError("segmenter output must be 1 x 5 x H x W");
  }
  const auto labels = scores[0].argmax(0).to(torch::kUInt8).contiguous();
  SegmentationMap m{generated.height, generated.width, {}};
  m.labels.assign(labels.data_ptr<std::uint8_t>(), labels.data_ptr<std::uint8_t>() + labels.numel());
  return m;
}

}  // namespace sgsynth
