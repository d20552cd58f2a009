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

#include "memwalk/lattice.hpp"

#include <charconv>
#include <cstdlib>

#include "memwalk/errors.hpp"

namespace memwalk {

Site Edge::tip() const {
  Site t = base;
  ++t.coords[axis];
  return t;
}

std::int64_t l1_distance(const Site& a, const Site& b) {
  if (a.dimension() != b.dimension()) throw UsageError("l1_distance: dimension mismatch");
  std::int64_t d = 0;
  for (int i = 0; i < a.dimension(); ++i) d += std::llabs(a[i] - b[i]);
  return d;
}

std::vector<Site> neighbors(const Site& x) {
  std::vector<Site> out;
  out.reserve(2 * x.coords.size());
  for (int axis = 0; axis < x.dimension(); ++axis) {
    for (int sign : {-1, +1}) {
      Site y = x;
      y[axis] += sign;
      out.push_back(std::move(y));
    }
  }
  return out;
}

Edge canonical_edge(const Site& x, const Site& y) {
  if (x.dimension() != y.dimension() || l1_distance(x, y) != 1) {
    throw UsageError("canonical_edge: sites " + to_string(x) + " and " + to_string(y) +
                     " are not adjacent");
  }
  for (int axis = 0; axis < x.dimension(); ++axis) {
    if (x[axis] != y[axis]) return Edge{x[axis] < y[axis] ? x : y, axis};
  }
  throw UsageError("canonical_edge: unreachable");
}

std::string to_string(const Site& x) {
  std::string s;
  for (int i = 0; i < x.dimension(); ++i) {
    if (i) s += ',';
    s += std::to_string(x[i]);
  }
  return s;
}

std::string to_string(const Edge& e) { return to_string(e.base) + "|" + std::to_string(e.axis); }

namespace {

std::int64_t parse_int(std::string_view tok, std::string_view context) {
  while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
  while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
  std::int64_t v = 0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
    throw UsageError("cannot parse integer '" + std::string(tok) + "' in '" +
                     std::string(context) + "'");
  }
  return v;
}

}  // namespace

Site parse_site(std::string_view text) {
  Site s;
  std::size_t start = 0;
  while (true) {
    auto comma = text.find(',', start);
    s.coords.push_back(parse_int(text.substr(start, comma - start), text));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return s;
}

Edge parse_edge(std::string_view text) {
  auto bar = text.find('|');
  if (bar == std::string_view::npos) throw UsageError("edge '" + std::string(text) + "' lacks '|'");
  Edge e{parse_site(text.substr(0, bar)), static_cast<int>(parse_int(text.substr(bar + 1), text))};
  if (e.axis < 0 || e.axis >= e.base.dimension()) {
    throw UsageError("edge '" + std::string(text) + "' has axis out of range");
  }
  return e;
}

}  // namespace memwalk
