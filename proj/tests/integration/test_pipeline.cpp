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

#include <doctest.h>

#include <openssl/evp.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "memwalk/commands.hpp"
#include "memwalk/experiment.hpp"

using namespace memwalk;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("memwalk_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    out += buf;
  }
  return out;
}

std::string minimal_config(const fs::path& out, const std::string& extra = "") {
  return "dimension = 3\ndelta = 1.0\nhorizon = 10000\nreplicas = 10\nmaster_seed = 5\n"
         "checkpoints = [100, 1000, 10000]\noutputs = \"" +
         out.generic_string() + "\"\n" + extra +
         "\n[memory]\nfamily = \"geometric\"\np = 0.5\n[analysis]\nregen = true\n";
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("run writes one row per replica and the summaries") {
  TempDir tmp;
  write(tmp.path / "a.toml", minimal_config(tmp.path / "out"));
  std::ostringstream out, err;
  REQUIRE(cmd_run({tmp.path / "a.toml"}, out, err) == kExitOk);
  const auto rows = slurp(tmp.path / "out" / "replicas.jsonl");
  CHECK(count_lines(rows) == 10);
  const auto first = nlohmann::json::parse(rows.substr(0, rows.find('\n')));
  for (const char* key : {"replica", "final", "returns", "last_return", "regens", "censored_from", "K_seq_digest"}) {
    CHECK(first.contains(key));
  }
  CHECK(first["K_seq_digest"].get<std::string>().size() == 64);
  CHECK(slurp(tmp.path / "out" / "summary.csv").rfind("checkpoint,msd_mean,msd_se\n100,", 0) == 0);
  CHECK(fs::exists(tmp.path / "out" / "summary.json"));
  CHECK(fs::exists(tmp.path / "out" / "tests.csv"));
  CHECK(out.str().find("outputs written") != std::string::npos);
}

TEST_CASE("identical inputs give identical artifacts for any worker count") {
  TempDir tmp;
  write(tmp.path / "a.toml", minimal_config("out"));
  std::ostringstream out, err;
  RunRequest one{tmp.path / "a.toml", 1, std::nullopt, std::nullopt, tmp.path / "r1"};
  RunRequest two{tmp.path / "a.toml", 1, std::nullopt, std::nullopt, tmp.path / "r2"};
  RunRequest four{tmp.path / "a.toml", 4, std::nullopt, std::nullopt, tmp.path / "r4"};
  REQUIRE(cmd_run(one, out, err) == kExitOk);
  REQUIRE(cmd_run(two, out, err) == kExitOk);
  REQUIRE(cmd_run(four, out, err) == kExitOk);
  for (const char* f : {"replicas.jsonl", "summary.csv", "summary.json", "tests.csv"}) {
    CHECK(sha256(slurp(tmp.path / "r1" / f)) == sha256(slurp(tmp.path / "r2" / f)));
    CHECK(sha256(slurp(tmp.path / "r1" / f)) == sha256(slurp(tmp.path / "r4" / f)));
  }
  RunRequest reseeded{tmp.path / "a.toml", 1, 6, std::nullopt, tmp.path / "r6"};
  REQUIRE(cmd_run(reseeded, out, err) == kExitOk);
  CHECK(slurp(tmp.path / "r1" / "replicas.jsonl") != slurp(tmp.path / "r6" / "replicas.jsonl"));
}

TEST_CASE("invalid config exits nonzero with the field and line") {
  TempDir tmp;
  write(tmp.path / "bad.toml", "dimension = 3\nreplicas = 0\n");
  std::ostringstream out, err;
  CHECK(cmd_run({tmp.path / "bad.toml"}, out, err) == kExitUsage);
  CHECK(err.str().find("line 2: replicas must be >= 1") != std::string::npos);
  std::ostringstream err2;
  CHECK(cmd_run({tmp.path / "missing.toml"}, out, err2) == kExitUsage);
  CHECK(err2.str().find("cannot read config file") != std::string::npos);
}

TEST_CASE("unwritable output directory exits nonzero") {
  TempDir tmp;
  write(tmp.path / "blocker", "a file, not a directory");
  write(tmp.path / "a.toml", minimal_config(tmp.path / "blocker" / "out"));
  std::ostringstream out, err;
  CHECK(cmd_run({tmp.path / "a.toml"}, out, err) != kExitOk);
  CHECK_FALSE(err.str().empty());
}

TEST_CASE("analyze reproduces the run-time summary") {
  TempDir tmp;
  for (const char* format : {"jsonl", "csv"}) {
    const auto dir = tmp.path / format;
    write(tmp.path / "a.toml",
          minimal_config(dir, std::string("format = \"") + format + "\"\nreplicas_note_unused = 0\n"));
    // the stray key must be rejected
    std::ostringstream out, err;
    CHECK(cmd_run({tmp.path / "a.toml"}, out, err) == kExitUsage);
    write(tmp.path / "a.toml", minimal_config(dir, std::string("format = \"") + format + "\"\n"));
    REQUIRE(cmd_run({tmp.path / "a.toml"}, out, err) == kExitOk);
    const auto before = slurp(dir / ("replicas." + std::string(format)));
    REQUIRE(cmd_analyze({dir}, out, err) == kExitOk);
    CHECK(slurp(dir / "analysis.json") == slurp(dir / "summary.json"));
    CHECK(slurp(dir / "analysis_summary.csv") == slurp(dir / "summary.csv"));
    CHECK(slurp(dir / "analysis_tests.csv") == slurp(dir / "tests.csv"));
    CHECK(slurp(dir / ("replicas." + std::string(format))) == before);
    // idempotent
    const auto first = slurp(dir / "analysis.json");
    REQUIRE(cmd_analyze({dir}, out, err) == kExitOk);
    CHECK(slurp(dir / "analysis.json") == first);
  }
  CHECK(slurp(tmp.path / "jsonl" / "summary.json") == slurp(tmp.path / "csv" / "summary.json"));
}

TEST_CASE("analyze reports missing inputs and missing data") {
  TempDir tmp;
  std::ostringstream out, err;
  fs::create_directories(tmp.path / "empty");
  CHECK(cmd_analyze({tmp.path / "empty"}, out, err) == kExitUsage);
  CHECK(err.str().find("run.json") != std::string::npos);
  CHECK(err.str().find("replicas.jsonl") != std::string::npos);

  write(tmp.path / "a.toml",
        "horizon = 100\nreplicas = 3\noutputs = \"" + (tmp.path / "nocp").generic_string() + "\"\n");
  REQUIRE(cmd_run({tmp.path / "a.toml"}, out, err) == kExitOk);
  AnalyzeRequest clt{tmp.path / "nocp"};
  clt.clt = true;
  std::ostringstream err2;
  CHECK(cmd_analyze(clt, out, err2) == kExitUsage);
  CHECK(err2.str().find("clt analysis needs checkpoint positions") != std::string::npos);
  AnalyzeRequest regen{tmp.path / "nocp"};
  regen.regen = true;
  std::ostringstream err3;
  CHECK(cmd_analyze(regen, out, err3) == kExitUsage);
  CHECK(err3.str().find("regeneration analysis needs regeneration data") != std::string::npos);

  fs::remove(tmp.path / "nocp" / "replicas.jsonl");
  std::ostringstream err4;
  CHECK(cmd_analyze({tmp.path / "nocp"}, out, err4) == kExitUsage);
  CHECK(err4.str().find("missing input files") != std::string::npos);
}

TEST_CASE("exact command") {
  auto exact = [](const std::string& family, const std::string& params) {
    std::ostringstream out, err;
    const int code = cmd_exact({family, parse_params(params), 3}, out, err);
    CHECK(code == kExitOk);
    return out.str();
  };
  const auto b = exact("bernoulli", "p1=0.5");
  CHECK(b.find("P[tau_1=1] = 0.5\n") != std::string::npos);
  CHECK(b.find("0  1  1\n") != std::string::npos);
  CHECK(b.find("1  0  1\n") != std::string::npos);
  CHECK(exact("geometric", "p=0.5").find("P[tau_1=1] = 0.288788095086") != std::string::npos);
  CHECK(exact("pareto", "alpha=0.8").find("P[tau_1<inf]=0 regime") != std::string::npos);
  CHECK(exact("degenerate", "k=2").find("P[tau_1<inf]=0 regime") != std::string::npos);
  std::ostringstream out, err;
  CHECK(cmd_exact({"zipf", {}, 3}, out, err) == kExitUsage);
  CHECK_THROWS(parse_params("p"));
}

TEST_CASE("sweep over a 2x2 grid") {
  TempDir tmp;
  const auto root = tmp.path / "sweep";
  write(tmp.path / "grid.toml", "horizon = 200\nreplicas = 4\noutputs = \"" + root.generic_string() +
                                    "\"\n[sweep]\ndelta = [0.5, 2]\ndimension = [3, 4]\n");
  std::ostringstream out, err;
  REQUIRE(cmd_sweep({tmp.path / "grid.toml"}, out, err) == kExitOk);
  const auto manifest = nlohmann::json::parse(slurp(root / "manifest.json"));
  REQUIRE(manifest["cells"].size() == 4);
  for (const auto& c : manifest["cells"]) {
    CHECK(c["status"] == "done");
    CHECK(fs::exists(root / c["dir"].get<std::string>() / "summary.json"));
    CHECK(c["params"].contains("delta"));
  }
  CHECK(manifest["cells"][0]["label"] == "delta=0.5,dimension=3");

  // interrupted: one cell lost its status, rerun only redoes that cell
  auto edited = manifest;
  edited["cells"][2]["status"] = "pending";
  write(root / "manifest.json", edited.dump(2));
  std::ostringstream again;
  REQUIRE(cmd_sweep({tmp.path / "grid.toml"}, again, err) == kExitOk);
  CHECK(again.str().find("3 skipped, 0 failed") != std::string::npos);
  CHECK(again.str().find("done  " + manifest["cells"][2]["label"].get<std::string>()) != std::string::npos);
}

TEST_CASE("sweep validation and failures") {
  TempDir tmp;
  std::ostringstream out, err;
  write(tmp.path / "dup.toml", "outputs = \"" + (tmp.path / "d").generic_string() +
                                   "\"\n[sweep]\ndelta = [0.5, 0.50]\n");
  CHECK(cmd_sweep({tmp.path / "dup.toml"}, out, err) == kExitUsage);
  CHECK(err.str().find("duplicate sweep cell 'delta=0.5'") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.path / "d"));

  std::ostringstream err2;
  write(tmp.path / "key.toml", "[sweep]\ncolour = [1, 2]\n");
  CHECK(cmd_sweep({tmp.path / "key.toml"}, out, err2) == kExitUsage);
  CHECK(err2.str().find("line 2: cannot sweep over 'colour'") != std::string::npos);

  const auto root = tmp.path / "f";
  write(tmp.path / "fail.toml", "horizon = 50\noutputs = \"" + root.generic_string() +
                                    "\"\n[sweep]\ndelta = [1, -1]\n");
  std::ostringstream out3;
  CHECK(cmd_sweep({tmp.path / "fail.toml"}, out3, err) == kExitFailure);
  const auto manifest = nlohmann::json::parse(slurp(root / "manifest.json"));
  CHECK(manifest["cells"][0]["status"] == "done");
  CHECK(manifest["cells"][1]["status"] == "failed");
  CHECK(manifest["cells"][1]["error"].get<std::string>().find("delta must be > 0") != std::string::npos);
}

TEST_CASE("MSD grows linearly for the memory walk") {
  ExperimentConfig cfg;
  cfg.walk.dimension = 3;
  cfg.walk.memory = MemoryLaw::geometric(0.5);
  cfg.walk.horizon = 100'000;
  for (std::int64_t n = 1000; n <= 100'000; n += 11'000) cfg.walk.checkpoints.push_back(n);
  cfg.replicas = 300;
  const auto e = run_ensemble(cfg, 1);
  const auto curve = msd_curve(e, e.checkpoints);
  const auto fit = fit_msd_linear(curve, 1000, 100'000);
  CHECK(fit.slope > 0.0);
  CHECK(fit.relative_residual < 0.02);
}
