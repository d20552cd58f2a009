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

#include <string>

#include "memwalk/config.hpp"
#include "memwalk/errors.hpp"

using namespace memwalk;

namespace {

std::string error_of(const std::string& text) {
  try {
    (void)ExperimentConfig::from_kv(KeyValueConfig::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("key-value syntax") {
  const auto kv = KeyValueConfig::parse(
      "# header comment\n"
      "dimension = 3   # trailing\n"
      "delta = 2.5\n"
      "outputs = \"runs/a#1\"\n"
      "\n"
      "[memory]\n"
      "family = \"pareto\"\n"
      "alpha = 2.5\n"
      "[analysis]\n"
      "clt = true\n"
      "checkpoints = [10, 1_000, 100000]\n");
  CHECK(kv.get_integer("dimension", 0) == 3);
  CHECK(kv.get_number("delta", 0) == 2.5);
  CHECK(kv.get_string("outputs", "") == "runs/a#1");
  CHECK(kv.get_string("memory.family", "") == "pareto");
  CHECK(kv.get_bool("analysis.clt", false));
  CHECK(kv.get_integer_list("analysis.checkpoints") == std::vector<std::int64_t>{10, 1000, 100000});
  CHECK(kv.line_of("memory.alpha") == 8);
  CHECK(kv.numbers_under("memory") == std::map<std::string, double>{{"alpha", 2.5}});
  CHECK(kv.get_integer("missing", 42) == 42);
}

TEST_CASE("syntax errors carry the line") {
  auto msg = [](const std::string& text) {
    try {
      (void)KeyValueConfig::parse(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg("a = 1\nb 2\n") == "line 2: expected 'key = value'");
  CHECK(msg("a = 1\na = 2\n").rfind("line 2: duplicate key 'a'", 0) == 0);
  CHECK(msg("x = \"open\n").rfind("line 1: unterminated string", 0) == 0);
  CHECK(msg("\n\n[bad\n").rfind("line 3:", 0) == 0);
  CHECK(msg("x = word\n").rfind("line 1: cannot parse value", 0) == 0);
  CHECK(msg("x = [1, 2\n").rfind("line 1: unterminated array", 0) == 0);
}

TEST_CASE("experiment validation names the field and line") {
  CHECK(error_of("replicas = 0\n") == "line 1: replicas must be >= 1");
  CHECK(error_of("horizon = 10\ndelta = -1\n") == "line 2: delta must be > 0");
  CHECK(error_of("dimension = 2.5\n") == "line 1: dimension must be an integer");
  CHECK(error_of("horizon = 10\ncheckpoints = [5, 20]\n") == "line 2: checkpoints must lie in [0, horizon]");
  CHECK(error_of("colour = 3\n") == "line 1: unknown key 'colour'");
  CHECK(error_of("[memory]\nfamily = \"zipf\"\n").rfind("line 2: memory.family:", 0) == 0);
  CHECK(error_of("[memory]\nfamily = \"geometric\"\np = 1.5\n").rfind("line 2: memory.family:", 0) == 0);
  CHECK(error_of("format = \"xml\"\n").rfind("line 1: format:", 0) == 0);
  CHECK(error_of("[analysis]\nclt = true\n") == "line 2: analysis.clt needs at least one checkpoint");
  CHECK(error_of("engine = \"orrw\"\n[analysis]\nregen = true\n").rfind("line 3: analysis.regen", 0) == 0);
  CHECK(error_of("engine = \"kernel\"\n[kernel]\nname = \"nope\"\n").rfind("line 3: kernel.name:", 0) == 0);
  CHECK(error_of("dimension = 3\n").empty());
}

TEST_CASE("defaults") {
  const auto c = ExperimentConfig::from_kv(KeyValueConfig::parse(""));
  CHECK(c.walk.dimension == 3);
  CHECK(c.walk.memory == MemoryLaw::geometric(0.5));
  CHECK(c.replicas == 1);
  CHECK(c.format == OutputFormat::kJsonl);
  CHECK(c.walk.engine == EngineKind::kMemoryWalk);
}

TEST_CASE("config text round-trips") {
  const auto c = ExperimentConfig::from_kv(KeyValueConfig::parse(
      "dimension = 4\ndelta = 0.3\nhorizon = 500\nreplicas = 7\nmaster_seed = 12345678901\n"
      "checkpoints = [10, 500]\nformat = \"csv\"\n"
      "[memory]\nfamily = \"uniform\"\nm = 6\n[analysis]\nregen = true\nclt = true\nalpha = 0.05\n"));
  const auto text = c.to_text();
  const auto back = ExperimentConfig::from_kv(KeyValueConfig::parse(text));
  CHECK(back.to_text() == text);
  CHECK(back.walk.memory == MemoryLaw::uniform(6));
  CHECK(back.master_seed == 12345678901ULL);
  CHECK(back.walk.checkpoints == std::vector<std::int64_t>{10, 500});
  CHECK(back.format == OutputFormat::kCsv);
  CHECK(back.alpha == 0.05);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-06) == "1e-06");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(std::nan("")) == "nan");
}
