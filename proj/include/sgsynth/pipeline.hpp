// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end steps behind the CLI subcommands.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgsynth/dataset.hpp"
#include "sgsynth/model.hpp"
#include "sgsynth/scene_request.hpp"
#include "sgsynth/sumo_bridge.hpp"
#include "sgsynth/synthetic.hpp"

namespace sgsynth {

RgbImage generate_request(Model& model, const SceneRequest& request);

/// Parses and validates a SceneRequest file against the model variant; the
/// DomainError lists every field error.
SceneRequest read_scene_request(const std::filesystem::path& path, GraphVariant model_variant);

/// One real frame: an image, its detection file and its capture time.
struct FrameSource {
  std::filesystem::path image;
  std::filesystem::path detections;
  double timestamp = 0.0;
};

/// Reads a frame list [{image, detections, time_of_day | timestamp}]; relative
/// paths resolve against the list's directory.
std::vector<FrameSource> read_frame_list(const std::filesystem::path& path);

/// Writes the frames as a dataset and returns the manifest. Images are resized
/// to the dataset resolution.
nlohmann::json build_dataset(const std::filesystem::path& out, const DatasetInfo& info,
                             const std::vector<FrameSource>& frames);

/// Writes procedurally generated frames as a dataset and returns the manifest.
nlohmann::json build_synthetic_dataset(const std::filesystem::path& out, const SyntheticOptions& options,
                                       const SplitRatio& ratio = {}, std::uint64_t split_seed = 0);

/// Box sizes of every entity node in the dataset's training split.
BBoxHistogram histogram_from_dataset(const DatasetReader& dataset, int bins_x = 8, int bins_y = 8);

/// A converted simulator frame as a SceneRequest JSON plus its per-vehicle errors.
nlohmann::json frame_scene_json(const FrameScene& scene, GraphVariant variant, std::uint64_t seed);

struct TrainingRun {
  std::int64_t steps = 0;           // additional steps to run
  std::int64_t checkpoint_every = 0;  // 0 writes only the final checkpoint
  std::filesystem::path out_dir;
};

/// Trains on the dataset's training split. Batches are drawn from a
/// permutation seeded by (train seed, epoch). Writes out_dir/losses.jsonl (one
/// LossReport per line), out_dir/step-XXXXXXXX.ckpt and out_dir/final.ckpt.
/// `on_step` sees every report.
void run_training(TrainState& state, const DatasetReader& dataset, const TrainingRun& run,
                  const std::function<void(const LossReport&)>& on_step = {});

/// Indices of the batch for `step` (0-based): consecutive slices of a per-epoch permutation.
std::vector<std::size_t> batch_indices(std::span<const std::size_t> pool, std::size_t batch_size, std::int64_t step,
                                       std::uint64_t seed);

}  // namespace sgsynth
