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

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memwalk {

/// A point of Z^d. Coordinates are in lattice units.
struct Site {
  std::vector<std::int64_t> coords;

  Site() = default;
  explicit Site(std::vector<std::int64_t> c) : coords(std::move(c)) {}
  static Site origin(int dimension) { return Site(std::vector<std::int64_t>(dimension, 0)); }

  int dimension() const noexcept { return static_cast<int>(coords.size()); }
  std::int64_t operator[](int axis) const { return coords[axis]; }
  std::int64_t& operator[](int axis) { return coords[axis]; }

  auto operator<=>(const Site&) const = default;
};

/// Undirected nearest-neighbour edge {base, base + unit(axis)}.
struct Edge {
  Site base;
  int axis = 0;

  Site tip() const;
  auto operator<=>(const Edge&) const = default;
};

std::int64_t l1_distance(const Site& a, const Site& b);

/// The 2d neighbours of x in axis-major order, minus before plus.
std::vector<Site> neighbors(const Site& x);

/// Canonical form of the edge joining two adjacent sites. Throws UsageError
/// when the sites are not at L1 distance 1.
Edge canonical_edge(const Site& x, const Site& y);

// "x0,x1,...,x{d-1}"
std::string to_string(const Site& x);
// "base|axis"
std::string to_string(const Edge& e);
Site parse_site(std::string_view text);
Edge parse_edge(std::string_view text);

}  // namespace memwalk
