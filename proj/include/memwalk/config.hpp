// Copyright 2026 The memwalk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "memwalk/memory_law.hpp"
#include "memwalk/walk_engine.hpp"

namespace memwalk {

/// One value of the key-value config format.
struct ConfigValue {
  enum class Kind { kString, kNumber, kBool, kArray };
  Kind kind = Kind::kString;
  std::string text;    // raw token (string contents for kString)
  double number = 0.0;
  bool integral = false;
  std::int64_t integer = 0;
  bool boolean = false;
  std::vector<ConfigValue> items;
  int line = 0;
};

/// Flat key-value file with dotted sections:
///
///   # comment
///   dimension = 3
///   [memory]
///   family = "geometric"   # same as memory.family = "geometric"
///   checkpoints = [100, 1000]
///
/// Values are double-quoted strings, numbers, true/false, or single-line
/// arrays of those. Errors carry the offending line.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const ConfigValue& at(const std::string& key) const;
  int line_of(const std::string& key) const;
  void set(const std::string& key, ConfigValue value) { values_[key] = std::move(value); }
  const std::map<std::string, ConfigValue>& values() const noexcept { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  std::int64_t get_integer(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::int64_t> get_integer_list(const std::string& key) const;
  /// All keys under "prefix." with numeric values, prefix stripped.
  std::map<std::string, double> numbers_under(const std::string& prefix) const;

  /// Throws ConfigError naming the first key not in \p known (and not under
  /// any of \p known_prefixes).
  void reject_unknown(const std::set<std::string>& known,
                      const std::set<std::string>& known_prefixes = {}) const;

 private:
  std::map<std::string, ConfigValue> values_;
};

/// Shortest decimal form that round-trips; "nan" / "inf" for non-finite values.
std::string format_double(double x);

enum class OutputFormat { kJsonl, kCsv };

std::string to_string(OutputFormat f);
OutputFormat parse_format(const std::string& name);

struct ExperimentConfig {
  WalkConfig walk;
  std::int64_t replicas = 1;
  std::uint64_t master_seed = 0;
  std::filesystem::path outputs = "memwalk_out";
  OutputFormat format = OutputFormat::kJsonl;

  bool analyze_regen = false;
  bool analyze_clt = false;
  bool analyze_returns = true;
  bool analyze_tail = false;
  std::int64_t return_cutoff = 0;
  double alpha = 0.01;
  std::int64_t clt_min_replicas = 500;
  NumericTolerances numerics;

  /// Parses and validates; errors name the field and its line.
  static ExperimentConfig from_kv(const KeyValueConfig& kv);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Same config as key-value text (round-trips through from_kv).
  std::string to_text() const;
};

/// Keys recognized by ExperimentConfig::from_kv.
const std::set<std::string>& experiment_keys();

}  // namespace memwalk
