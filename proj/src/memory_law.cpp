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

#include "memwalk/memory_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "memwalk/errors.hpp"

namespace memwalk {

namespace {

// Draws beyond this are clamped; no desk-scale horizon comes close.
constexpr std::int64_t kMaxK = std::int64_t{1} << 62;
// Direct product terms before switching to the analytic remainder.
constexpr std::int64_t kMaxDirectTerms = std::int64_t{1} << 16;

// sum_{j >= 0} (a + j)^(-s), s > 1, a >= 1.
double hurwitz_zeta(double s, double a) {
  double sum = 0.0;
  constexpr double kSwitch = 32.0;
  while (a < kSwitch) {
    sum += std::pow(a, -s);
    a += 1.0;
  }
  // Euler-Maclaurin with Bernoulli terms B2, B4, B6.
  const double as = std::pow(a, -s);
  sum += a * as / (s - 1.0) + 0.5 * as;
  double fact = s;  // s (s+1) ... rising
  double apow = as / a;
  sum += fact * apow / 12.0;
  fact *= (s + 1.0) * (s + 2.0);
  apow /= a * a;
  sum -= fact * apow / 720.0;
  fact *= (s + 3.0) * (s + 4.0);
  apow /= a * a;
  sum += fact * apow / 30240.0;
  return sum;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

}  // namespace

MemoryLaw MemoryLaw::degenerate(std::int64_t k) {
  require(k >= 0, "degenerate(k): k must be >= 0");
  return MemoryLaw(MemoryFamily::kDegenerate, static_cast<double>(k));
}

MemoryLaw MemoryLaw::bernoulli(double p1) {
  require(p1 >= 0.0 && p1 <= 1.0, "bernoulli(p1): p1 must lie in [0, 1]");
  return MemoryLaw(MemoryFamily::kBernoulli, p1);
}

MemoryLaw MemoryLaw::geometric(double p) {
  require(p >= 0.0 && p < 1.0, "geometric(p): p must lie in [0, 1)");
  return MemoryLaw(MemoryFamily::kGeometric, p);
}

MemoryLaw MemoryLaw::uniform(std::int64_t m) {
  require(m >= 0, "uniform(m): m must be >= 0");
  return MemoryLaw(MemoryFamily::kUniform, static_cast<double>(m));
}

MemoryLaw MemoryLaw::pareto(double alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), "pareto(alpha): alpha must be > 0");
  return MemoryLaw(MemoryFamily::kPareto, alpha);
}

MemoryLaw MemoryLaw::from_params(const std::string& family,
                                 const std::map<std::string, double>& params) {
  auto get = [&](std::initializer_list<const char*> names) -> double {
    for (const char* n : names) {
      if (auto it = params.find(n); it != params.end()) return it->second;
    }
    throw UsageError("memory family '" + family + "' requires parameter '" +
                     std::string(*names.begin()) + "'");
  };
  auto integral = [&](double v, const char* name) {
    if (v != std::floor(v)) throw UsageError(std::string("parameter '") + name + "' must be an integer");
    return static_cast<std::int64_t>(v);
  };
  if (family == "degenerate") return degenerate(integral(get({"k"}), "k"));
  if (family == "bernoulli") return bernoulli(get({"p1", "p"}));
  if (family == "geometric") return geometric(get({"p"}));
  if (family == "uniform") return uniform(integral(get({"m"}), "m"));
  if (family == "pareto") return pareto(get({"alpha"}));
  throw UsageError("unknown memory family '" + family +
                   "' (expected degenerate, bernoulli, geometric, uniform, pareto)");
}

std::string MemoryLaw::family_name() const {
  switch (family_) {
    case MemoryFamily::kDegenerate: return "degenerate";
    case MemoryFamily::kBernoulli: return "bernoulli";
    case MemoryFamily::kGeometric: return "geometric";
    case MemoryFamily::kUniform: return "uniform";
    case MemoryFamily::kPareto: return "pareto";
  }
  return "?";
}

std::string MemoryLaw::describe() const {
  std::ostringstream os;
  os << family_name() << '(';
  switch (family_) {
    case MemoryFamily::kDegenerate: os << "k=" << static_cast<std::int64_t>(param_); break;
    case MemoryFamily::kBernoulli: os << "p1=" << param_; break;
    case MemoryFamily::kGeometric: os << "p=" << param_; break;
    case MemoryFamily::kUniform: os << "m=" << static_cast<std::int64_t>(param_); break;
    case MemoryFamily::kPareto: os << "alpha=" << param_; break;
  }
  os << ')';
  return os.str();
}

std::int64_t MemoryLaw::sample(Rng& rng) const { return quantile(uniform01(rng)); }

// Smallest k with cdf(k) > u, for u in [0, 1).
std::int64_t MemoryLaw::quantile(double u) const {
  const double v = 1.0 - u;  // in (0, 1]
  switch (family_) {
    case MemoryFamily::kDegenerate:
      return static_cast<std::int64_t>(param_);
    case MemoryFamily::kBernoulli:
      return u < 1.0 - param_ ? 0 : 1;
    case MemoryFamily::kGeometric: {
      if (param_ == 0.0) return 0;
      const double k = std::floor(std::log(v) / std::log(param_));
      return k >= static_cast<double>(kMaxK) ? kMaxK : static_cast<std::int64_t>(k);
    }
    case MemoryFamily::kUniform: {
      const double m1 = param_ + 1.0;
      return std::min(static_cast<std::int64_t>(u * m1), static_cast<std::int64_t>(param_));
    }
    case MemoryFamily::kPareto: {
      const double k = std::floor(std::pow(v, -1.0 / param_)) - 1.0;
      if (k <= 0.0) return 0;
      return k >= static_cast<double>(kMaxK) ? kMaxK : static_cast<std::int64_t>(k);
    }
  }
  return 0;
}

double MemoryLaw::pmf(std::int64_t k) const {
  if (k < 0) return 0.0;
  return tail(k - 1) - tail(k);
}

double MemoryLaw::cdf(std::int64_t i) const {
  if (i < 0) return 0.0;
  return 1.0 - tail(i);
}

double MemoryLaw::tail(std::int64_t i) const {
  if (i < 0) return 1.0;
  const double x = static_cast<double>(i);
  switch (family_) {
    case MemoryFamily::kDegenerate:
      return x < param_ ? 1.0 : 0.0;
    case MemoryFamily::kBernoulli:
      return i == 0 ? param_ : 0.0;
    case MemoryFamily::kGeometric:
      return std::pow(param_, x + 1.0);
    case MemoryFamily::kUniform:
      return x < param_ ? (param_ - x) / (param_ + 1.0) : 0.0;
    case MemoryFamily::kPareto:
      return std::pow(x + 2.0, -param_);
  }
  return 0.0;
}

double MemoryLaw::tail_sum_from(std::int64_t from) const {
  from = std::max<std::int64_t>(from, 0);
  const double x = static_cast<double>(from);
  switch (family_) {
    case MemoryFamily::kDegenerate:
      return std::max(0.0, param_ - x);
    case MemoryFamily::kBernoulli:
      return from == 0 ? param_ : 0.0;
    case MemoryFamily::kGeometric:
      return std::pow(param_, x + 1.0) / (1.0 - param_);
    case MemoryFamily::kUniform: {
      const double j = param_ - x;
      return j > 0.0 ? j * (j + 1.0) / 2.0 / (param_ + 1.0) : 0.0;
    }
    case MemoryFamily::kPareto:
      if (param_ <= 1.0) return std::numeric_limits<double>::infinity();
      return hurwitz_zeta(param_, x + 2.0);
  }
  return 0.0;
}

bool MemoryLaw::moment_finite(int m) const {
  if (m < 1) throw UsageError("moment_finite: m must be >= 1");
  if (family_ == MemoryFamily::kPareto) return static_cast<double>(m) < param_;
  return true;
}

std::optional<std::int64_t> MemoryLaw::support_max() const {
  switch (family_) {
    case MemoryFamily::kDegenerate: return static_cast<std::int64_t>(param_);
    case MemoryFamily::kBernoulli: return param_ > 0.0 ? 1 : 0;
    case MemoryFamily::kGeometric:
      if (param_ == 0.0) return 0;
      return std::nullopt;
    case MemoryFamily::kUniform: return static_cast<std::int64_t>(param_);
    case MemoryFamily::kPareto: return std::nullopt;
  }
  return std::nullopt;
}

double prob_regen_at_fixed_time(const MemoryLaw& law, const NumericTolerances& tol) {
  if (!law.moment_finite(1)) return 0.0;
  double log_p = 0.0;
  std::int64_t i = 0;
  for (;; ++i) {
    const double t = law.tail(i);
    if (t >= 1.0) return 0.0;
    log_p += std::log1p(-t);
    if (law.tail_sum_from(i + 1) < tol.mass) return std::exp(log_p);
    if (i + 1 >= kMaxDirectTerms) break;
  }
  // Slowly decaying tails: add log(1 - t) ~ -t - t^2/2 for the rest. Only the
  // pareto family gets here.
  const std::int64_t from = i + 1;
  log_p -= law.tail_sum_from(from);
  if (law.family() == MemoryFamily::kPareto) {
    const double sq = hurwitz_zeta(2.0 * law.param(), static_cast<double>(from) + 2.0);
    log_p -= 0.5 * sq;
    if (law.tail(from) * sq > tol.product) {
      throw DomainError("prob_regen_at_fixed_time: remainder bound exceeds tolerance");
    }
  }
  return std::exp(log_p);
}

double s1_conditional_pmf(const MemoryLaw& law, std::int64_t k, const NumericTolerances& tol) {
  if (k < 0) return 0.0;
  return s1_conditional_pmf_table(law, k, tol).back();
}

std::vector<double> s1_conditional_pmf_table(const MemoryLaw& law, std::int64_t kmax,
                                             const NumericTolerances& tol) {
  const double p = prob_regen_at_fixed_time(law, tol);
  if (!(p > 0.0) || !(p < 1.0)) {
    throw DomainError("S_1 conditioning is degenerate: P[S_1 < inf] = " + std::to_string(1.0 - p) +
                      " for " + law.describe());
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(kmax + 1, 0)));
  double prefix = 1.0;
  for (std::int64_t k = 0; k <= kmax; ++k) {
    out.push_back(prefix * law.tail(k) / (1.0 - p));
    prefix *= law.cdf(k);
  }
  return out;
}

std::int64_t confirmation_window(const MemoryLaw& law, double tolerance) {
  if (!(tolerance > 0.0)) throw UsageError("confirmation_window: tolerance must be > 0");
  if (law.tail(0) < tolerance) return 0;
  std::int64_t hi = 1;
  while (law.tail(hi) >= tolerance) {
    if (hi >= kMaxK / 2) return kMaxK;
    hi *= 2;
  }
  std::int64_t lo = hi / 2;  // tail(lo) >= tolerance
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (law.tail(mid) < tolerance ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace memwalk
