// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// sgsynth command-line interface. Run `sgsynth --help` for the subcommands.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "sgsynth/error.hpp"
#include "sgsynth/image.hpp"
#include "sgsynth/pipeline.hpp"
#include "sgsynth/service.hpp"
#include "sgsynth/settings.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgsynth;

namespace {

/// A subcommand's usage error: printed with the subcommand name, exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
std::optional<T> flag(const CLI::Option* opt, const T& value) {
  if (opt == nullptr || opt->count() == 0) return std::nullopt;
  return value;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path, "cannot write file");
  out << j.dump(2) << '\n';
}

std::string require(const std::optional<std::string>& value, const std::string& what) {
  if (!value || value->empty()) throw UsageError(what);
  return *value;
}

ModelConfig model_config(const Settings& settings) {
  return model_config_from_json(settings.section("model"), ModelConfig{});
}

TrainConfig train_config(const Settings& settings) {
  return train_config_from_json(settings.section("train"), TrainConfig{});
}

std::unique_ptr<TrainState> load_checkpoint(const std::string& path) {
  return std::make_unique<TrainState>(TrainState::load(path));
}

GraphVariant variant_setting(const Settings& settings, const std::optional<std::string>& flag_value) {
  if (auto v = settings.string("variant", flag_value)) return parse_graph_variant(*v);
  return model_config(settings).variant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-graph conditioned traffic image synthesis"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON config file (flags > SGSYNTH_* environment > file)")
      ->check(CLI::ExistingFile);

  // build-dataset
  auto* build = app.add_subcommand("build-dataset", "Build a dataset from frames or procedurally");
  std::string build_out, build_frames;
  int build_synthetic = 0;
  std::uint64_t build_seed = 0;
  auto* build_out_opt = build->add_option("-o,--out", build_out, "Output directory [dataset.path]");
  auto* frames_opt = build->add_option("--frames", build_frames, "Frame list JSON [{image, detections, time_of_day}]");
  auto* synthetic_opt = build->add_option("--synthetic", build_synthetic, "Generate N procedural frames instead");
  frames_opt->excludes(synthetic_opt);
  auto* build_seed_opt = build->add_option("--seed", build_seed, "Split and color seed [dataset.seed]");

  // train
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  std::string train_dataset, train_out, train_resume;
  std::int64_t train_steps = 0;
  auto* train_dataset_opt = train->add_option("-d,--dataset", train_dataset, "Dataset directory [dataset.path]");
  auto* train_out_opt = train->add_option("-o,--out", train_out, "Output directory [output]");
  auto* train_steps_opt = train->add_option("--steps", train_steps, "Steps to run [train.steps]");
  train->add_option("--resume", train_resume, "Continue from a checkpoint")->check(CLI::ExistingFile);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a dataset's test split");
  std::string eval_ckpt, eval_dataset, eval_out, eval_extractor, eval_segmenter = "reference";
  std::uint64_t eval_seed = 0;
  int eval_input_size = 299;
  bool eval_bus = false;
  auto* eval_ckpt_opt = evaluate->add_option("-k,--checkpoint", eval_ckpt, "Checkpoint [checkpoint]");
  auto* eval_dataset_opt = evaluate->add_option("-d,--dataset", eval_dataset, "Dataset directory [dataset.path]");
  evaluate->add_option("-o,--out", eval_out, "Report path (default: stdout)");
  evaluate->add_option("--extractor", eval_extractor, "TorchScript feature extractor (default: random projection)")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--extractor-input", eval_input_size, "Extractor input resolution");
  evaluate->add_option("--segmenter", eval_segmenter,
                       "'reference', a directory of label PNGs, or a TorchScript file");
  evaluate->add_option("--seed", eval_seed, "Generation seed");
  evaluate->add_flag("--include-bus", eval_bus, "Score the bus class too");

  // sumo-convert
  auto* sumo = app.add_subcommand("sumo-convert", "Convert simulator frames into scene requests");
  std::string sumo_frames, sumo_lanes, sumo_hist, sumo_dataset, sumo_out, sumo_variant;
  std::uint64_t sumo_seed = 0;
  bool sumo_random = false;
  sumo->add_option("--frames", sumo_frames, "Simulator frames JSON")->required()->check(CLI::ExistingFile);
  sumo->add_option("--lanes", sumo_lanes, "Lane correspondence JSON")->required()->check(CLI::ExistingFile);
  auto* hist_opt = sumo->add_option("--histogram", sumo_hist, "Box-size histogram JSON")->check(CLI::ExistingFile);
  auto* sumo_dataset_opt = sumo->add_option("-d,--dataset", sumo_dataset, "Fit box sizes from this dataset");
  hist_opt->excludes(sumo_dataset_opt);
  sumo->add_option("-o,--out", sumo_out, "Output directory")->required();
  auto* sumo_variant_opt = sumo->add_option("--variant", sumo_variant, "cluster or discrete [variant, model.variant]");
  sumo->add_option("--seed", sumo_seed, "Seed for box draws and generation");
  sumo->add_flag("--random-sizes", sumo_random, "Draw box sizes at random instead of the bin median");

  // generate
  auto* generate = app.add_subcommand("generate", "Render a scene request to PNG");
  std::string gen_ckpt, gen_scene, gen_out;
  std::uint64_t gen_seed = 0;
  auto* gen_ckpt_opt = generate->add_option("-k,--checkpoint", gen_ckpt, "Checkpoint [checkpoint]");
  generate->add_option("-s,--scene", gen_scene, "Scene request JSON")->required()->check(CLI::ExistingFile);
  generate->add_option("-o,--out", gen_out, "Output PNG")->required();
  auto* gen_seed_opt = generate->add_option("--seed", gen_seed, "Override the request seed");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP generation service");
  std::string serve_ckpt, serve_host;
  std::int64_t serve_port = 0, serve_queue = 0;
  bool serve_init = false;
  auto* serve_ckpt_opt = serve->add_option("-k,--checkpoint", serve_ckpt, "Checkpoint [checkpoint]");
  auto* serve_host_opt = serve->add_option("--host", serve_host, "Bind address [service.host]");
  auto* serve_port_opt = serve->add_option("--port", serve_port, "Port [service.port]");
  auto* serve_queue_opt = serve->add_option("--queue-capacity", serve_queue, "Waiting requests [service.queue_capacity]");
  serve->add_flag("--untrained", serve_init, "Serve a freshly initialized model from the config");

  // summary
  auto* summary = app.add_subcommand("summary", "Print parameter counts for the configured model");

  CLI11_PARSE(app, argc, argv);

  const auto* active = app.get_subcommands().front();
  const std::string name = active->get_name();
  try {
    const Settings settings = config_path.empty() ? Settings() : Settings::from_file(config_path);

    if (active == build) {
      const auto out = require(settings.string("dataset.path", flag(build_out_opt, build_out)),
                               "--out (or dataset.path) is required");
      const auto config = model_config(settings);
      const auto seed = static_cast<std::uint64_t>(settings.integer_or("dataset.seed", flag(build_seed_opt, static_cast<std::int64_t>(build_seed)), 0));
      DatasetInfo info;
      info.variant = config.variant;
      info.lattice = config.lattice;
      info.image_height = info.image_width = config.image_size;
      info.split_seed = seed;
      info.split_ratio.train = settings.integer_or("dataset.split_train", std::nullopt, info.split_ratio.train);
      info.split_ratio.test = settings.integer_or("dataset.split_test", std::nullopt, info.split_ratio.test);
      json manifest;
      if (synthetic_opt->count() > 0) {
        if (build_synthetic <= 0) throw UsageError("--synthetic needs a positive frame count");
        SyntheticOptions o;
        o.count = build_synthetic;
        o.image_size = config.image_size;
        o.lattice = config.lattice;
        o.variant = config.variant;
        o.seed = seed;
        manifest = build_synthetic_dataset(out, o, info.split_ratio, seed);
      } else {
        const auto list = require(settings.string("dataset.frames", flag(frames_opt, build_frames)),
                                  "one of --frames or --synthetic is required");
        manifest = build_dataset(out, info, read_frame_list(list));
      }
      std::cout << "wrote " << manifest["entries"].size() << " items to " << out << '\n';
      return 0;
    }

    if (active == train) {
      const auto dataset_dir = require(settings.string("dataset.path", flag(train_dataset_opt, train_dataset)),
                                       "--dataset (or dataset.path) is required");
      const auto out = require(settings.string("output", flag(train_out_opt, train_out)),
                               "--out (or output) is required");
      std::unique_ptr<TrainState> state;
      if (!train_resume.empty()) {
        state = load_checkpoint(train_resume);
      } else {
        state = std::make_unique<TrainState>(model_config(settings), train_config(settings));
      }
      const DatasetReader dataset(dataset_dir);
      TrainingRun run;
      run.steps = settings.integer_or("train.steps", flag(train_steps_opt, train_steps), state->train_config().steps);
      run.checkpoint_every = state->train_config().checkpoint_every;
      run.out_dir = out;
      if (run.steps <= 0) throw UsageError("--steps must be positive");
      run_training(*state, dataset, run, [&](const LossReport& r) {
        if (r.step % 10 == 0 || r.step == state->step()) {
          std::fprintf(stderr, "step %lld  d_real %.4f  d_fake %.4f  g_total %.4f\n", static_cast<long long>(r.step),
                       r.d_real, r.d_fake, r.g_total);
        }
      });
      std::cout << "checkpoint " << (fs::path(out) / "final.ckpt").string() << " at step " << state->step() << '\n';
      return 0;
    }

    if (active == evaluate) {
      const auto ckpt = require(settings.string("checkpoint", flag(eval_ckpt_opt, eval_ckpt)),
                                "--checkpoint (or checkpoint) is required");
      const auto dataset_dir = require(settings.string("dataset.path", flag(eval_dataset_opt, eval_dataset)),
                                       "--dataset (or dataset.path) is required");
      auto state = load_checkpoint(ckpt);
      const DatasetReader dataset(dataset_dir);
      std::vector<DataPoint> test;
      for (const auto i : dataset.indices(Split::Test)) test.push_back(dataset.read(i));
      if (test.empty()) throw DomainError("dataset " + dataset_dir + " has no test items");
      std::unique_ptr<FeatureExtractor> extractor;
      if (eval_extractor.empty()) {
        extractor = std::make_unique<RandomProjectionExtractor>();
      } else {
        extractor = std::make_unique<TorchScriptExtractor>(eval_extractor, eval_input_size);
      }
      std::unique_ptr<Segmenter> segmenter;
      if (eval_segmenter == "reference") {
        segmenter = std::make_unique<ReferenceSegmenter>();
      } else if (fs::is_directory(eval_segmenter)) {
        segmenter = std::make_unique<PrecomputedSegmenter>(eval_segmenter);
      } else if (fs::is_regular_file(eval_segmenter)) {
        segmenter = std::make_unique<TorchScriptSegmenter>(eval_segmenter);
      } else {
        throw UsageError("--segmenter must be 'reference', a directory, or a TorchScript file");
      }
      const auto report = evaluate_model(state->model(), test, *extractor, *segmenter, {eval_seed, eval_bus});
      auto j = to_json(report);
      if (eval_out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        write_json(eval_out, j);
      }
      return 0;
    }

    if (active == sumo) {
      const auto variant = variant_setting(settings, flag(sumo_variant_opt, sumo_variant));
      const auto corr = read_lane_correspondence(sumo_lanes);
      BBoxHistogram hist;
      if (!sumo_hist.empty()) {
        std::ifstream in(sumo_hist);
        try {
          hist = BBoxHistogram::from_json(json::parse(in));
        } catch (const std::exception& e) {
          throw IoError(sumo_hist, e.what());
        }
      } else {
        const auto dataset_dir = require(settings.string("dataset.path", flag(sumo_dataset_opt, sumo_dataset)),
                                         "one of --histogram or --dataset is required");
        hist = histogram_from_dataset(DatasetReader(dataset_dir));
      }
      FrameConversionOptions options{variant, sumo_seed, sumo_random ? SizeDraw::Random : SizeDraw::Median};
      const auto frames = read_sim_frames(sumo_frames);
      fs::create_directories(sumo_out);
      std::size_t vehicle_errors = 0;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto scene = sim_frame_to_scene(frames[i], corr, hist, options);
        vehicle_errors += scene.errors.size();
        char file[32];
        std::snprintf(file, sizeof file, "scene-%06zu.json", i);
        write_json(fs::path(sumo_out) / file, frame_scene_json(scene, variant, sumo_seed));
      }
      std::cout << "wrote " << frames.size() << " scenes to " << sumo_out;
      if (vehicle_errors > 0) std::cout << "; skipped vehicles: " << vehicle_errors << " (listed under \"errors\")";
      std::cout << '\n';
      return 0;
    }

    if (active == generate) {
      const auto ckpt = require(settings.string("checkpoint", flag(gen_ckpt_opt, gen_ckpt)),
                                "--checkpoint (or checkpoint) is required");
      auto state = load_checkpoint(ckpt);
      auto& model = state->model();
      std::ifstream in(gen_scene);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw IoError(gen_scene, std::string("not valid JSON: ") + e.what());
      }
      // sumo-convert output wraps the request.
      if (j.is_object() && j.contains("request") && j.contains("errors")) j = j["request"];
      auto parsed = parse_scene_request(j, model.config.variant);
      if (!parsed.ok()) {
        std::string msg = gen_scene + ": invalid scene request";
        for (const auto& e : parsed.errors) msg += "\n  " + (e.field.empty() ? "request" : e.field) + ": " + e.message;
        throw DomainError(msg);
      }
      if (gen_seed_opt->count() > 0) parsed.request->seed = gen_seed;
      write_png(gen_out, generate_request(model, *parsed.request));
      std::cout << "wrote " << gen_out << '\n';
      return 0;
    }

    if (active == serve) {
      ServiceOptions options;
      options.host = settings.string_or("service.host", flag(serve_host_opt, serve_host), options.host);
      options.port = static_cast<int>(settings.integer_or("service.port", flag(serve_port_opt, serve_port), options.port));
      const auto queue = settings.integer_or("service.queue_capacity", flag(serve_queue_opt, serve_queue),
                                             static_cast<std::int64_t>(options.queue_capacity));
      if (queue <= 0) throw UsageError("--queue-capacity must be positive");
      options.queue_capacity = static_cast<std::size_t>(queue);
      std::shared_ptr<LoadedModel> loaded;
      if (auto ckpt = settings.string("checkpoint", flag(serve_ckpt_opt, serve_ckpt))) {
        loaded = std::make_shared<LoadedModel>(LoadedModel{load_checkpoint(*ckpt), *ckpt});
      } else if (serve_init) {
        loaded = std::make_shared<LoadedModel>(LoadedModel{
            std::make_unique<TrainState>(model_config(settings), train_config(settings)), "untrained"});
      } else {
        std::cerr << "sgsynth serve: no checkpoint given; /generate will answer 503\n";
      }
      static GenerationService* running = nullptr;
      GenerationService service(loaded, options);
      running = &service;
      std::signal(SIGINT, [](int) {
        if (running) running->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (running) running->stop();
      });
      std::cout << "listening on " << options.host << ":" << options.port << std::endl;
      service.run();
      return 0;
    }

    if (active == summary) {
      std::cout << to_json(summarize(model_config(settings))).dump(2) << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "sgsynth " << name << ": " << e.what() << "\nRun 'sgsynth " << name << " --help' for usage.\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sgsynth " << name << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
