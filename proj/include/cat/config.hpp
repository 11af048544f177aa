/* Copyright 2026 The CAT Codec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cat {

// Flat `key = value` text, one key per line, `#` starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  // Throws ConfigError naming every key from `keys` that is absent.
  void require_all(const std::vector<std::string>& keys) const;

  std::string string_or(const std::string& key, const std::string& fallback) const;
  double real_or(const std::string& key, double fallback) const;
  std::uint64_t uint_or(const std::string& key, std::uint64_t fallback) const;
  bool bool_or(const std::string& key, bool fallback) const;
  std::vector<std::string> list_or(const std::string& key, const std::vector<std::string>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cat
