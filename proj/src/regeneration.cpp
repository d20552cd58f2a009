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

#include "memwalk/regeneration.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <stdexcept>

#include "memwalk/errors.hpp"
#include "memwalk/simd/kernels.hpp"

namespace memwalk {

RegenerationReport detect_offline(std::span<const std::int64_t> ks, std::int64_t window) {
  if (ks.empty()) throw UsageError("detect_offline: empty K-sequence");
  if (window < 0) throw UsageError("detect_offline: negative confirmation window");
  const auto horizon = static_cast<std::int64_t>(ks.size()) - 1;
  std::vector<std::uint8_t> flags(ks.size());
  simd::regen_flags(ks, flags);

  RegenerationReport report;
  report.horizon = horizon;
  report.censored_from = std::max<std::int64_t>(1, window > horizon ? 1 : horizon - window + 1);
  for (std::int64_t n = 1; n <= horizon; ++n) {
    if (!flags[n]) continue;
    (n < report.censored_from ? report.regen_indices : report.pending).push_back(n);
  }
  return report;
}

RegenerationReport detect_offline(std::span<const std::int64_t> ks, const MemoryLaw& law,
                                  double tolerance) {
  return detect_offline(ks, confirmation_window(law, tolerance));
}

void OnlineCandidate::push(std::int64_t k) {
  ++t_;
  if (k > t_ - candidate_) candidate_ = t_ + 1;
}

std::int64_t sample_tau1_by_detection(const MemoryLaw& law, Rng& rng, std::int64_t window) {
  if (!law.moment_finite(1)) throw DomainError("tau_1 is infinite a.s. for " + law.describe());
  if (law.cdf(0) <= 0.0) {  // P[tau_1 = 1] > 0 iff E[K] < inf and P[K = 0] > 0
    throw DomainError("P[tau_1 = 1] = 0 for " + law.describe() + "; tau_1 is infinite a.s.");
  }
  std::vector<std::int64_t> ks;
  ks.push_back(law.sample(rng));  // K_0 never constrains tau_1 but keeps the sequence whole
  OnlineCandidate online;
  while (online.time() < online.candidate() + window) {
    const std::int64_t k = law.sample(rng);
    ks.push_back(k);
    online.push(k);
  }
  const auto report = detect_offline(ks, window);
  if (report.regen_indices.empty() || report.regen_indices.front() != online.candidate()) {
    throw std::logic_error("sample_tau1_by_detection: online and offline detectors disagree");
  }
  return report.regen_indices.front();
}

namespace {

constexpr std::int64_t kExplicitOffsets = 64;

// First offset i >= 0 with K_{c+i} > i, or -1 when no offset ever refutes.
std::int64_t sample_refutation_offset(const MemoryLaw& law, Rng& rng, double mass_tol) {
  std::int64_t i = 0;
  for (; i < kExplicitOffsets; ++i) {
    if (law.tail_sum_from(i) < mass_tol) return -1;
    if (law.sample(rng) > i) return i;
  }
  for (std::int64_t a = i; law.tail_sum_from(a) >= mass_tol; a *= 2) {
    const double q = law.tail(a);  // dominates tail(j) for j >= a
    if (q <= 0.0) return -1;
    const double log_miss = std::log1p(-q);
    std::int64_t j = a - 1;
    while (true) {
      const double v = 1.0 - uniform01(rng);
      const double skip = std::floor(std::log(v) / log_miss);
      if (skip >= static_cast<double>(a)) break;
      j += 1 + static_cast<std::int64_t>(skip);
      if (j >= 2 * a) break;
      if (uniform01(rng) * q < law.tail(j)) return j;
    }
  }
  return -1;
}

}  // namespace

std::int64_t sample_tau1(const MemoryLaw& law, Rng& rng, const NumericTolerances& tol) {
  if (!law.moment_finite(1)) throw DomainError("tau_1 is infinite a.s. for " + law.describe());
  if (law.tail(0) >= 1.0) throw DomainError("P[K = 0] = 0 for " + law.describe() + "; tau_1 is infinite a.s.");
  std::int64_t c = 1;
  while (true) {
    const std::int64_t s = sample_refutation_offset(law, rng, tol.mass);
    if (s < 0) return c;
    c += s + 1;
  }
}

Tau1Estimate tau1_pmf_oracle(const MemoryLaw& law, std::int64_t n, std::int64_t samples,
                             std::uint64_t seed, double tolerance) {
  if (!law.moment_finite(1)) {
    throw DomainError("E[K] is infinite for " + law.describe() + ": tau_1 = inf a.s.");
  }
  if (samples < 1) throw UsageError("tau1_pmf_oracle: samples must be >= 1");
  const std::int64_t window = confirmation_window(law, tolerance);
  Rng rng(seed);
  std::int64_t hits = 0;
  for (std::int64_t s = 0; s < samples; ++s) hits += sample_tau1_by_detection(law, rng, window) == n;
  Tau1Estimate est;
  est.n = n;
  est.samples = samples;
  est.probability = static_cast<double>(hits) / static_cast<double>(samples);
  est.standard_error = std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(samples));
  return est;
}

std::vector<double> tau1_pmf_exact(const MemoryLaw& law, std::int64_t nmax, const NumericTolerances& tol) {
  const auto kmax = law.support_max();
  if (!kmax) throw DomainError("tau1_pmf_exact: " + law.describe() + " has unbounded support");
  std::vector<double> f(static_cast<std::size_t>(std::max<std::int64_t>(nmax, 0) + 1), 0.0);
  const double p = prob_regen_at_fixed_time(law, tol);
  if (p <= 0.0 || nmax < 1) return f;
  // unconditional P[S_1 = s], zero beyond the support
  std::vector<double> q(static_cast<std::size_t>(*kmax + 1));
  double prefix = 1.0;
  for (std::int64_t s = 0; s <= *kmax; ++s) {
    q[s] = prefix * law.tail(s);
    prefix *= law.cdf(s);
  }
  f[1] = p;
  for (std::int64_t m = 2; m <= nmax; ++m) {
    double acc = 0.0;
    for (std::int64_t s = 0; s <= std::min<std::int64_t>(m - 2, *kmax); ++s) acc += q[s] * f[m - s - 1];
    f[m] = acc;
  }
  return f;
}

std::vector<Site> extract_subwalk(std::span<const Site> at_regens, RegenerationReport& report) {
  if (at_regens.size() != report.regen_indices.size()) {
    throw UsageError("extract_subwalk: " + std::to_string(at_regens.size()) + " positions for " +
                     std::to_string(report.regen_indices.size()) + " regenerations");
  }
  const int d = at_regens.empty() ? 0 : at_regens.front().dimension();
  std::vector<Site> y;
  y.reserve(at_regens.size() + 1);
  y.push_back(Site::origin(d));
  report.increments.clear();
  for (std::size_t k = 0; k < at_regens.size(); ++k) {
    y.push_back(at_regens[k]);
    if (k == 0) continue;
    RegenerationIncrement inc;
    inc.dt = report.regen_indices[k] - report.regen_indices[k - 1];
    inc.dy.resize(d);
    for (int a = 0; a < d; ++a) inc.dy[a] = at_regens[k][a] - at_regens[k - 1][a];
    report.increments.push_back(std::move(inc));
  }
  return y;
}

std::vector<Site> extract_subwalk_from_trajectory(std::span<const Site> trajectory,
                                                  RegenerationReport& report) {
  if (trajectory.empty() || static_cast<std::int64_t>(trajectory.size()) <= report.horizon) {
    throw UsageError("extract_subwalk: trajectory of length " + std::to_string(trajectory.size()) +
                     " does not cover horizon " + std::to_string(report.horizon));
  }
  std::vector<Site> at;
  at.reserve(report.regen_indices.size());
  for (auto n : report.regen_indices) at.push_back(trajectory[n]);
  auto y = extract_subwalk(at, report);
  y.front() = trajectory.front();
  return y;
}

bool ConditionedStart::accepts(std::span<const std::int64_t> ks) const {
  if (static_cast<std::int64_t>(ks.size()) <= depth) {
    throw UsageError("conditioned start: sequence shorter than depth + 1");
  }
  for (std::int64_t i = 0; i <= depth; ++i) {
    if (ks[i] > i) return false;
  }
  return true;
}

ConditionedStart conditioned_start_approx(const MemoryLaw& law, std::int64_t depth) {
  if (depth < 0) throw UsageError("conditioned_start_approx: depth must be >= 0");
  if (!(prob_regen_at_fixed_time(law) > 0.0)) {
    throw DomainError("conditioned_start_approx: D_0 has probability 0 under " + law.describe());
  }
  return ConditionedStart{depth, law.tail_sum_from(depth + 1)};
}

std::string to_jsonl(const RegenerationReport& report) {
  nlohmann::ordered_json j;
  j["regens"] = report.regen_indices;
  j["censored_from"] = report.censored_from;
  auto incs = nlohmann::ordered_json::array();
  for (const auto& inc : report.increments) {
    auto row = nlohmann::ordered_json::array({inc.dt});
    for (auto v : inc.dy) row.push_back(v);
    incs.push_back(std::move(row));
  }
  j["increments"] = std::move(incs);
  return j.dump();
}

}  // namespace memwalk
