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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "memwalk/config.hpp"
#include "memwalk/stats.hpp"

namespace memwalk {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

struct RunRequest {
  std::filesystem::path config;
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::optional<OutputFormat> format;
  std::optional<std::filesystem::path> outputs;
};

struct ExactRequest {
  std::string family;
  std::map<std::string, double> params;
  std::int64_t kmax = 20;
};

struct AnalyzeRequest {
  std::filesystem::path dir;
  // Unset toggles keep the value recorded with the run.
  std::optional<bool> regen;
  std::optional<bool> clt;
  std::optional<bool> returns;
  std::optional<bool> tail;
};

struct SweepRequest {
  std::filesystem::path grid;
  int workers = 1;
};

/// Each command reports to \p out, errors to \p err, and returns an ExitCode.
int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err);
int cmd_exact(const ExactRequest& req, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeRequest& req, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepRequest& req, std::ostream& out, std::ostream& err);

/// Parses "p=0.5,alpha=2" style parameter lists.
std::map<std::string, double> parse_params(const std::string& text);

void print_summary(std::ostream& out, const PooledSummary& summary);

/// One cell of a sweep grid.
struct SweepCell {
  std::string label;                        // "delta=0.5,memory.p=0.3"
  std::map<std::string, ConfigValue> values;
  std::string dir;
};

/// Cartesian product of the [sweep] arrays of \p grid, keys in sorted order.
/// Throws ConfigError on unknown keys, non-array values or duplicate labels.
std::vector<SweepCell> expand_sweep(const KeyValueConfig& grid);

}  // namespace memwalk
