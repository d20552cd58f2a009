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

// Independent reference implementations used only by the tests. They share
// no code with the library beyond the value types.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "memwalk/lattice.hpp"

namespace memwalk::oracle {

/// n in [1, N - window] is a regeneration iff K_{n+i} <= i for every i with
/// n + i <= N, where N = ks.size() - 1. Quadratic scan.
inline std::vector<std::int64_t> brute_force_regens(std::span<const std::int64_t> ks, std::int64_t window) {
  const auto big_n = static_cast<std::int64_t>(ks.size()) - 1;
  std::vector<std::int64_t> out;
  for (std::int64_t n = 1; n <= big_n - window; ++n) {
    bool ok = true;
    for (std::int64_t i = 0; n + i <= big_n && ok; ++i) ok = ks[n + i] <= i;
    if (ok) out.push_back(n);
  }
  return out;
}

/// Euler function prod_{i >= 1} (1 - q^i) by the pentagonal number theorem.
inline double euler_phi(double q) {
  double s = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double sign = k % 2 ? -1.0 : 1.0;
    const double a = std::pow(q, k * (3.0 * k - 1.0) / 2.0);
    const double b = std::pow(q, k * (3.0 * k + 1.0) / 2.0);
    if (a == 0.0) break;
    s += sign * (a + b);
  }
  return s;
}

/// Step weights from the full path: the edge {x, y} counts as reinforced
/// when some step m with n - k + 1 <= m <= n crossed it (any m >= 1 for
/// orrw).
inline std::vector<double> naive_weights(const std::vector<Site>& path, std::int64_t k, double delta,
                                         bool orrw = false) {
  const Site& x = path.back();
  const auto n = static_cast<std::int64_t>(path.size()) - 1;
  const int d = x.dimension();
  std::vector<double> w;
  for (int a = 0; a < d; ++a) {
    for (int s : {-1, 1}) {
      Site y = x;
      y[a] += s;
      const std::int64_t from = orrw ? 1 : n - k + 1;
      bool hit = false;
      for (std::int64_t m = std::max<std::int64_t>(from, 1); m <= n && (orrw || k > 0); ++m) {
        const Site& u = path[m - 1];
        const Site& v = path[m];
        hit = hit || (u == x && v == y) || (u == y && v == x);
      }
      w.push_back(hit ? 1.0 + delta : 1.0);
    }
  }
  return w;
}

/// Exact law of X_steps by enumerating all (2d)^steps paths, with memory
/// length ks[n] used for step n -> n+1.
inline std::map<Site, double> exact_law(int d, double delta, std::span<const std::int64_t> ks, int steps,
                                        bool orrw = false) {
  std::map<Site, double> law;
  std::vector<Site> path{Site::origin(d)};
  auto rec = [&](auto&& self, double p) -> void {
    const auto n = static_cast<int>(path.size()) - 1;
    if (n == steps) {
      law[path.back()] += p;
      return;
    }
    const auto w = naive_weights(path, orrw ? 0 : ks[n], delta, orrw);
    double total = 0.0;
    for (double v : w) total += v;
    for (int i = 0; i < 2 * d; ++i) {
      Site y = path.back();
      y[i / 2] += i % 2 ? 1 : -1;
      path.push_back(y);
      self(self, p * w[i] / total);
      path.pop_back();
    }
  };
  rec(rec, 1.0);
  return law;
}

}  // namespace memwalk::oracle
