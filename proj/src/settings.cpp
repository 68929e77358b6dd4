// Copyright (C) 2026 The sgsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "sgsynth/settings.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include "sgsynth/error.hpp"

namespace sgsynth {

using nlohmann::json;

std::optional<std::string> process_env(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

std::string env_name(const std::string& key) {
  std::string out = "SGSYNTH_";
  for (const char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

Settings::Settings(json file, EnvLookup env) : file_(std::move(file)), env_(std::move(env)) {
  if (!file_.is_object()) throw DomainError("config must be a JSON object");
}

Settings Settings::from_file(const std::filesystem::path& path, EnvLookup env) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw IoError(path, "config must be a JSON object");
  return Settings(std::move(j), std::move(env));
}

json Settings::section(const std::string& name) const {
  const auto it = file_.find(name);
  return it == file_.end() ? json::object() : *it;
}

const json* Settings::lookup(const std::string& key) const {
  const json* node = &file_;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object()) return nullptr;
    const auto it = node->find(part);
    if (it == node->end()) return nullptr;
    node = &*it;
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

std::optional<std::string> Settings::string(const std::string& key, const std::optional<std::string>& flag) const {
  if (flag) return flag;
  if (auto v = env_(env_name(key))) return v;
  const json* v = lookup(key);
  if (v == nullptr || v->is_null()) return std::nullopt;
  if (!v->is_string()) throw DomainError("config key '" + key + "' must be a string");
  return v->get<std::string>();
}

std::optional<std::int64_t> Settings::integer(const std::string& key,
                                              const std::optional<std::int64_t>& flag) const {
  if (flag) return flag;
  if (auto v = env_(env_name(key))) {
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) {
      throw DomainError("environment variable " + env_name(key) + " must be an integer, got '" + *v + "'");
    }
    return out;
  }
  const json* v = lookup(key);
  if (v == nullptr || v->is_null()) return std::nullopt;
  if (!v->is_number_integer()) throw DomainError("config key '" + key + "' must be an integer");
  return v->get<std::int64_t>();
}

std::string Settings::string_or(const std::string& key, const std::optional<std::string>& flag,
                                std::string fallback) const {
  return string(key, flag).value_or(std::move(fallback));
}

std::int64_t Settings::integer_or(const std::string& key, const std::optional<std::int64_t>& flag,
                                  std::int64_t fallback) const {
  return integer(key, flag).value_or(fallback);
}

}  // namespace sgsynth
