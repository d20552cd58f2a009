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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "memwalk/config.hpp"
#include "memwalk/stats.hpp"

namespace memwalk {

/// Lowercase hex SHA-256 of the little-endian 64-bit encoding of \p ks.
std::string k_sequence_digest(std::span<const std::int64_t> ks);

/// Simulates replica \p replica of \p cfg. The K sequence comes from the
/// replica's memory stream, steps from its step stream, so the result
/// depends only on (master_seed, replica).
ReplicaRecord run_replica(const ExperimentConfig& cfg, std::int64_t replica);

/// Runs every replica on \p workers threads; the result is in replica order
/// and independent of \p workers.
Ensemble run_ensemble(const ExperimentConfig& cfg, int workers);

AnalysisOptions analysis_options(const ExperimentConfig& cfg);

nlohmann::ordered_json replica_to_json(const ReplicaRecord& rec, bool with_regen);
ReplicaRecord replica_from_json(const nlohmann::json& j, int dimension);

std::string replica_csv_header();
std::string replica_to_csv(const ReplicaRecord& rec, bool with_regen);
ReplicaRecord replica_from_csv(const std::string& line, int dimension);

nlohmann::ordered_json summary_to_json(const PooledSummary& summary);
std::string summary_csv(const PooledSummary& summary);
std::string tests_csv(const PooledSummary& summary);

/// Artifacts written by a run; analyze reads them back.
struct RunArtifacts {
  static constexpr const char* kRunJson = "run.json";
  static constexpr const char* kReplicasJsonl = "replicas.jsonl";
  static constexpr const char* kReplicasCsv = "replicas.csv";
  static constexpr const char* kSummaryCsv = "summary.csv";
  static constexpr const char* kTestsCsv = "tests.csv";
  static constexpr const char* kSummaryJson = "summary.json";
};

/// Writes run.json, the replica table and the pooled summaries into
/// cfg.outputs. Files are written to a temporary name and renamed.
void write_run(const ExperimentConfig& cfg, const Ensemble& ensemble, const PooledSummary& summary);

struct LoadedRun {
  ExperimentConfig config;
  Ensemble ensemble;
};

/// Reads a run directory back. Throws ConfigError naming every missing file.
LoadedRun load_run(const std::filesystem::path& dir);

/// Writes \p text to \p path through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace memwalk
