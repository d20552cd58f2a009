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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memwalk/rng.hpp"

namespace memwalk {

enum class MemoryFamily { kDegenerate, kBernoulli, kGeometric, kUniform, kPareto };

/// Fixed numerical thresholds for the exact renewal quantities.
struct NumericTolerances {
  double mass = 1e-12;           // stop the product once the remaining tail mass is below this
  double product = 1e-10;        // guaranteed bound on the product's truncation error
  double confirmation = 1e-6;    // regeneration confirmation window: tail(W) < this
};

/// Law of the i.i.d. memory lengths K_n. Immutable once built.
///
/// Families and their tails P[K > k]:
///   degenerate(k)   K = k
///   bernoulli(p1)   K in {0,1}, P[K = 1] = p1
///   geometric(p)    pmf (1-p) p^k,  tail p^(k+1)
///   uniform(m)      uniform on {0..m}
///   pareto(alpha)   tail (2+k)^(-alpha), i.e. P[K >= k] = (1+k)^(-alpha),
///                   so P[K = 0] = 1 - 2^(-alpha) > 0
class MemoryLaw {
 public:
  static MemoryLaw degenerate(std::int64_t k);
  static MemoryLaw bernoulli(double p1);
  static MemoryLaw geometric(double p);
  static MemoryLaw uniform(std::int64_t m);
  static MemoryLaw pareto(double alpha);

  /// Builds a law from a family name and named parameters, e.g.
  /// ("geometric", {{"p", 0.5}}). Throws UsageError on unknown names.
  static MemoryLaw from_params(const std::string& family,
                               const std::map<std::string, double>& params);

  MemoryFamily family() const noexcept { return family_; }
  double param() const noexcept { return param_; }
  std::string family_name() const;
  std::string describe() const;

  /// Inverse-cdf draw from a single uniform word.
  std::int64_t sample(Rng& rng) const;
  std::int64_t quantile(double u) const;

  double pmf(std::int64_t k) const;
  /// P[K <= i]; zero for i < 0.
  double cdf(std::int64_t i) const;
  /// P[K > i], computed without cancellation.
  double tail(std::int64_t i) const;
  /// sum_{i >= from} P[K > i] = E[(K - from)^+]; infinite for infinite mean.
  double tail_sum_from(std::int64_t from) const;

  /// E[K^m] < infinity.
  bool moment_finite(int m) const;
  /// Largest value in the support, when bounded.
  std::optional<std::int64_t> support_max() const;

  bool operator==(const MemoryLaw&) const = default;

 private:
  MemoryLaw(MemoryFamily f, double p) : family_(f), param_(p) {}

  MemoryFamily family_;
  double param_;
};

inline std::int64_t sample_k(const MemoryLaw& law, Rng& rng) { return law.sample(rng); }

/// P[tau_1 = 1] = prod_{i >= 0} P[K <= i]. Zero when E[K] is infinite.
double prob_regen_at_fixed_time(const MemoryLaw& law, const NumericTolerances& tol = {});

/// P[S_1 = k | S_1 < inf] = prod_{i<k} P[K <= i] * P[K > k] / (1 - P[tau_1 = 1]).
/// Throws DomainError when P[tau_1 = 1] is 0 or 1.
double s1_conditional_pmf(const MemoryLaw& law, std::int64_t k, const NumericTolerances& tol = {});

/// Same as above for k = 0..kmax in one pass.
std::vector<double> s1_conditional_pmf_table(const MemoryLaw& law, std::int64_t kmax,
                                             const NumericTolerances& tol = {});

/// Smallest W with P[K > W] < tolerance.
std::int64_t confirmation_window(const MemoryLaw& law, double tolerance);

}  // namespace memwalk
