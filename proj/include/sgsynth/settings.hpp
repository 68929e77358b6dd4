// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

// Layered settings lookup: command-line flag, then environment, then config file.
//
// A dotted key such as "service.port" reads file["service"]["port"] and the
// environment variable SGSYNTH_SERVICE_PORT.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

namespace sgsynth {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// std::getenv, with empty values treated as unset.
std::optional<std::string> process_env(const std::string& name);

/// "service.queue_capacity" -> "SGSYNTH_SERVICE_QUEUE_CAPACITY".
std::string env_name(const std::string& key);

class Settings {
 public:
  explicit Settings(nlohmann::json file = nlohmann::json::object(), EnvLookup env = process_env);
  /// Reads a JSON config file; IoError when unreadable or not an object.
  static Settings from_file(const std::filesystem::path& path, EnvLookup env = process_env);

  const nlohmann::json& file() const { return file_; }
  /// The file's section, or an empty object.
  nlohmann::json section(const std::string& name) const;

  /// Resolved value or nullopt when no layer sets it. DomainError names the
  /// layer when a value does not parse.
  std::optional<std::string> string(const std::string& key, const std::optional<std::string>& flag) const;
  std::optional<std::int64_t> integer(const std::string& key, const std::optional<std::int64_t>& flag) const;

  std::string string_or(const std::string& key, const std::optional<std::string>& flag, std::string fallback) const;
  std::int64_t integer_or(const std::string& key, const std::optional<std::int64_t>& flag,
                          std::int64_t fallback) const;

 private:
  const nlohmann::json* lookup(const std::string& key) const;

  nlohmann::json file_;
  EnvLookup env_;
};

}  // namespace sgsynth
