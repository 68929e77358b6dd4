// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// The JSON request that drives generation, shared by the CLI and the service.
//
//   {
//     "version": 1,                       optional, only 1 is accepted
//     "entities": [
//       {"class": "car", "bbox": [x, y, w, h], "color": "red"},
//       {"class": "bus", "bbox": {"x": .5, "y": .5, "w": .2, "h": .1},
//        "color": {"clusters": [{"rgb": [r, g, b], "weight": 1.0}]}}
//     ],
//     "time_of_day": "HH:MM",             optional, defaults to "12:00"
//     "seed": 7,                          optional, defaults to 0
//     "variant": "discrete"               optional, must match the model
//   }
//
// bbox is center + extent in [0,1]. color is a palette name, "#rrggbb", or up
// to five clusters with rgb in [0,1] and non-negative weights.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgsynth/scene.hpp"

namespace sgsynth {

inline constexpr int kSceneRequestVersion = 1;

struct SceneRequest {
  std::vector<SceneEntity> entities;
  double time_seconds = 12 * 3600.0;
  std::uint64_t seed = 0;
  GraphVariant variant = GraphVariant::Discrete;
};

struct FieldError {
  std::string field;  // JSON path, e.g. "entities[2].color"
  std::string message;
};

struct SceneRequestParse {
  std::optional<SceneRequest> request;
  std::vector<FieldError> errors;

  bool ok() const { return request.has_value(); }
};

/// Validates every field and collects all errors instead of stopping at the
/// first. Colors are converted to `model_variant`'s feature form.
SceneRequestParse parse_scene_request(const nlohmann::json& j, GraphVariant model_variant);

nlohmann::json to_json(const SceneRequest& request);
nlohmann::json to_json(const FieldError& error);
nlohmann::json field_errors_json(const std::vector<FieldError>& errors);

/// The palette as [{name, rgb: [r, g, b] bytes, hex}].
nlohmann::json palette_json();

/// "HH:MM" for seconds since midnight, rounded down to the minute.
std::string format_time_of_day(double seconds);

}  // namespace sgsynth
