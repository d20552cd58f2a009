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

// memwalk command-line interface.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "memwalk/commands.hpp"
#include "memwalk/errors.hpp"

int main(int argc, char** argv) {
  using namespace memwalk;
  CLI::App app{"memwalk: simulate and analyze random walks with random memory"};
  app.require_subcommand(1);

  RunRequest run;
  std::string run_format;
  std::uint64_t run_seed = 0;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "simulate an ensemble described by a config file");
  run_cmd->add_option("config", run.config, "experiment config")->required();
  run_cmd->add_option("--workers", run.workers, "worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "override master_seed");
  auto* format_opt =
      run_cmd->add_option("--format", run_format, "replica table format")->check(CLI::IsMember({"csv", "jsonl"}));
  auto* out_opt = run_cmd->add_option("--out", run_out, "override the output directory");

  ExactRequest exact;
  std::string exact_params;
  auto* exact_cmd = app.add_subcommand("exact", "exact regeneration quantities of a memory law");
  exact_cmd->add_option("--family", exact.family, "degenerate|bernoulli|geometric|uniform|pareto")->required();
  exact_cmd->add_option("--params", exact_params, "e.g. p=0.5 or alpha=2.5");
  exact_cmd->add_option("--kmax", exact.kmax, "largest k of the S_1 table");

  AnalyzeRequest analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "recompute statistics from a run directory");
  analyze_cmd->add_option("dir", analyze.dir, "run output directory")->required();
  bool a_regen = false, a_clt = false, a_returns = false, a_tail = false;
  auto* regen_flag = analyze_cmd->add_flag("--regen,!--no-regen", a_regen, "regeneration statistics");
  auto* clt_flag = analyze_cmd->add_flag("--clt,!--no-clt", a_clt, "central limit checks");
  auto* returns_flag = analyze_cmd->add_flag("--returns,!--no-returns", a_returns, "return statistics");
  auto* tail_flag = analyze_cmd->add_flag("--tail,!--no-tail", a_tail, "tail index of regeneration gaps");

  SweepRequest sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run every cell of a parameter grid");
  sweep_cmd->add_option("grid", sweep.grid, "grid config")->required();
  sweep_cmd->add_option("--workers", sweep.workers, "worker threads per cell")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*run_cmd) {
    if (*seed_opt) run.seed = run_seed;
    if (*format_opt) run.format = parse_format(run_format);
    if (*out_opt) run.outputs = run_out;
    return cmd_run(run, std::cout, std::cerr);
  }
  if (*exact_cmd) {
    try {
      exact.params = parse_params(exact_params);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    }
    return cmd_exact(exact, std::cout, std::cerr);
  }
  if (*analyze_cmd) {
    if (*regen_flag) analyze.regen = a_regen;
    if (*clt_flag) analyze.clt = a_clt;
    if (*returns_flag) analyze.returns = a_returns;
    if (*tail_flag) analyze.tail = a_tail;
    return cmd_analyze(analyze, std::cout, std::cerr);
  }
  return cmd_sweep(sweep, std::cout, std::cerr);
}
