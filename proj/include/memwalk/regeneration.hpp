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
#include <span>
#include <string>
#include <vector>

#include "memwalk/lattice.hpp"
#include "memwalk/memory_law.hpp"
#include "memwalk/rng.hpp"

namespace memwalk {

/// (tau_{k+1} - tau_k, Y_{k+1} - Y_k) for consecutive confirmed regenerations.
struct RegenerationIncrement {
  std::int64_t dt = 0;
  std::vector<std::int64_t> dy;

  bool operator==(const RegenerationIncrement&) const = default;
};

struct RegenerationReport {
  std::int64_t horizon = 0;
  /// Confirmed regeneration times in [1, horizon - W], increasing.
  std::vector<std::int64_t> regen_indices;
  /// Smallest index whose status cannot be confirmed at this horizon.
  std::int64_t censored_from = 1;
  /// Indices in [censored_from, horizon] that pass every observed constraint.
  std::vector<std::int64_t> pending;
  /// Filled by extract_subwalk; size regen_indices.size() - 1 once filled.
  std::vector<RegenerationIncrement> increments;

  bool operator==(const RegenerationReport&) const = default;
};

/// Regeneration times of K_0..K_N (N = ks.size() - 1): n is reported iff
/// n - K_n, (n+1) - K_{n+1}, ... , N - K_N are all >= n and n <= N - window.
/// Uses one backward suffix-minimum pass. Throws UsageError on empty input.
RegenerationReport detect_offline(std::span<const std::int64_t> ks, std::int64_t window);

/// detect_offline with the window taken from the law's tail at \p tolerance.
RegenerationReport detect_offline(std::span<const std::int64_t> ks, const MemoryLaw& law,
                                  double tolerance = NumericTolerances{}.confirmation);

/// Streaming first-regeneration candidate over K_1, K_2, ...
/// After each push, candidate() is the smallest index >= 1 not yet refuted.
class OnlineCandidate {
 public:
  void push(std::int64_t k);
  std::int64_t candidate() const noexcept { return candidate_; }
  /// Index of the last value pushed (0 before any push).
  std::int64_t time() const noexcept { return t_; }

 private:
  std::int64_t candidate_ = 1;
  std::int64_t t_ = 0;
};

/// Draws K-sequences from \p law and extends the horizon until the first
/// regeneration is confirmed by detect_offline with confirmation window
/// \p window. Returns tau_1.
std::int64_t sample_tau1_by_detection(const MemoryLaw& law, Rng& rng, std::int64_t window);

/// Exact-in-law draw of tau_1 that only simulates the events K_{c+i} > i
/// for the running candidate c: explicit K draws for small offsets, then
/// thinning over geometric blocks until the remaining tail mass is below
/// \p tol.mass. Cost is independent of the confirmation window, which makes
/// heavy-tailed laws tractable.
std::int64_t sample_tau1(const MemoryLaw& law, Rng& rng, const NumericTolerances& tol = {});

struct Tau1Estimate {
  std::int64_t n = 0;
  double probability = 0.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
};

/// Monte Carlo P[tau_1 = n] from \p samples detection runs.
/// Throws DomainError when E[K] is infinite (tau_1 = inf a.s.).
Tau1Estimate tau1_pmf_oracle(const MemoryLaw& law, std::int64_t n, std::int64_t samples = 1'000'000,
                             std::uint64_t seed = 1, double tolerance = NumericTolerances{}.confirmation);

/// Exact P[tau_1 = n], n = 0..nmax, from the renewal composition
/// tau_1 = N + sum_{k<N} S_k. Finite-support laws only (DomainError otherwise).
std::vector<double> tau1_pmf_exact(const MemoryLaw& law, std::int64_t nmax,
                                   const NumericTolerances& tol = {});

/// Y_0 = origin, Y_k = X_{tau_k}. \p at_regens holds X at each confirmed
/// regeneration, in order. Fills report.increments.
std::vector<Site> extract_subwalk(std::span<const Site> at_regens, RegenerationReport& report);
/// Same from a stride-1 trajectory X_0..X_M with M >= horizon.
std::vector<Site> extract_subwalk_from_trajectory(std::span<const Site> trajectory,
                                                  RegenerationReport& report);

/// Accepts K-sequences with K_i <= i for all i <= depth. The accepted event
/// differs from D_0 by at most error_bound = sum_{i > depth} P[K > i].
struct ConditionedStart {
  std::int64_t depth = 0;
  double error_bound = 0.0;
  bool accepts(std::span<const std::int64_t> ks) const;
};

ConditionedStart conditioned_start_approx(const MemoryLaw& law, std::int64_t depth);

/// {"regens":[...],"censored_from":n,"increments":[[dt,dy0,dy1,...],...]}
std::string to_jsonl(const RegenerationReport& report);

}  // namespace memwalk
