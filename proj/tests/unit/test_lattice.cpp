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

#include "memwalk/errors.hpp"
#include "memwalk/lattice.hpp"

using namespace memwalk;

TEST_CASE("neighbors are axis-major, minus before plus") {
  CHECK(neighbors(Site({0})) == std::vector<Site>{Site({-1}), Site({1})});
  CHECK(neighbors(Site({0, 0})) == std::vector<Site>{Site({-1, 0}), Site({1, 0}), Site({0, -1}), Site({0, 1})});
  const Site x({1, 2, 3});
  const auto ns = neighbors(x);
  REQUIRE(ns.size() == 6);
  for (const auto& y : ns) CHECK(l1_distance(x, y) == 1);
}

TEST_CASE("canonical edge does not depend on orientation") {
  CHECK(canonical_edge(Site({0}), Site({1})) == Edge{Site({0}), 0});
  CHECK(canonical_edge(Site({1}), Site({0})) == Edge{Site({0}), 0});
  CHECK(canonical_edge(Site({0, 0}), Site({0, -1})) == Edge{Site({0, -1}), 1});
  CHECK(canonical_edge(Site({4, -2, 7}), Site({4, -2, 8})).tip() == Site({4, -2, 8}));
}

TEST_CASE("canonical edge rejects sites that are not adjacent") {
  CHECK_THROWS_AS(canonical_edge(Site({0, 0}), Site({1, 1})), UsageError);
  CHECK_THROWS_AS(canonical_edge(Site({0}), Site({0})), UsageError);
  CHECK_THROWS_AS(canonical_edge(Site({0}), Site({0, 1})), UsageError);
}

TEST_CASE("text forms round-trip") {
  const Site x({-3, 0, 12});
  CHECK(to_string(x) == "-3,0,12");
  CHECK(parse_site(to_string(x)) == x);
  const Edge e{Site({5, -1}), 1};
  CHECK(to_string(e) == "5,-1|1");
  CHECK(parse_edge(to_string(e)) == e);
  CHECK_THROWS(parse_site("1,,2"));
  CHECK_THROWS(parse_edge("1,2|7"));
}

TEST_CASE("l1 distance") {
  CHECK(l1_distance(Site({0, 0, 0}), Site({1, -2, 3})) == 6);
  CHECK(l1_distance(Site({5}), Site({5})) == 0);
}
