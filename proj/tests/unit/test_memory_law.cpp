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

#include <cmath>
#include <ostream>
#include <vector>

#include "memwalk/errors.hpp"
#include "memwalk/memory_law.hpp"
#include "memwalk/stats.hpp"
#include "oracles.hpp"

using namespace memwalk;

namespace {

std::vector<MemoryLaw> shipped_laws() {
  return {MemoryLaw::degenerate(0), MemoryLaw::degenerate(3),  MemoryLaw::bernoulli(0.5),
          MemoryLaw::geometric(0.5), MemoryLaw::geometric(0.9), MemoryLaw::uniform(4),
          MemoryLaw::pareto(2.5),    MemoryLaw::pareto(1.5)};
}

}  // namespace

TEST_CASE("cdf values") {
  const auto g = MemoryLaw::geometric(0.5);
  CHECK(g.cdf(0) == doctest::Approx(0.5));
  CHECK(g.cdf(1) == doctest::Approx(0.75));
  CHECK(g.cdf(-1) == 0.0);
  for (int i : {0, 1, 10, 1000}) CHECK(MemoryLaw::degenerate(0).cdf(i) == 1.0);
  // P[K >= k] = (1+k)^-alpha, so P[K <= 0] = 1 - 2^-alpha.
  const auto p = MemoryLaw::pareto(2.5);
  CHECK(p.cdf(0) == doctest::Approx(1.0 - std::pow(2.0, -2.5)).epsilon(1e-14));
  CHECK(p.cdf(1) == doctest::Approx(1.0 - std::pow(3.0, -2.5)).epsilon(1e-14));
  CHECK(MemoryLaw::bernoulli(0.3).cdf(0) == doctest::Approx(0.7));
  CHECK(MemoryLaw::uniform(3).cdf(1) == doctest::Approx(0.5));
}

TEST_CASE("tail is 1 - cdf without cancellation") {
  const auto g = MemoryLaw::geometric(0.5);
  CHECK(g.tail(200) == std::ldexp(1.0, -201));
  CHECK(MemoryLaw::pareto(2.5).tail(1'000'000) == doctest::Approx(std::pow(1'000'002.0, -2.5)));
  for (const auto& law : shipped_laws()) {
    for (int i = 0; i < 50; ++i) {
      CHECK(law.cdf(i) + law.tail(i) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(law.cdf(i + 1) >= law.cdf(i));
      CHECK(law.pmf(i + 1) == doctest::Approx(law.cdf(i + 1) - law.cdf(i)).epsilon(1e-12));
    }
    if (law.moment_finite(1)) CHECK(law.cdf(1'000'000'000) > 1.0 - 1e-6);
  }
}

TEST_CASE("tail sums against direct summation") {
  for (const auto& law : shipped_laws()) {
    for (std::int64_t from : {0, 1, 7}) {
      double direct = 0.0;
      for (std::int64_t i = from; i < from + 2'000'000; ++i) direct += law.tail(i);
      const double bound = law.family() == MemoryFamily::kPareto
                               ? std::pow(from + 2'000'000.0, 1.0 - law.param()) / (law.param() - 1.0)
                               : 1e-15;
      CHECK(std::abs(law.tail_sum_from(from) - direct) <= bound * 1.01 + 1e-12);
    }
  }
  CHECK(std::isinf(MemoryLaw::pareto(0.8).tail_sum_from(0)));
  CHECK(std::isinf(MemoryLaw::pareto(1.0).tail_sum_from(3)));
}

TEST_CASE("moment finiteness") {
  CHECK(MemoryLaw::geometric(0.5).moment_finite(3));
  CHECK(MemoryLaw::pareto(2.5).moment_finite(2));
  CHECK_FALSE(MemoryLaw::pareto(2.5).moment_finite(3));
  CHECK_FALSE(MemoryLaw::pareto(0.8).moment_finite(1));
  CHECK(MemoryLaw::uniform(5).moment_finite(10));
}

TEST_CASE("P[tau_1 = 1] product") {
  CHECK(prob_regen_at_fixed_time(MemoryLaw::degenerate(0)) == 1.0);
  CHECK(prob_regen_at_fixed_time(MemoryLaw::bernoulli(0.5)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(prob_regen_at_fixed_time(MemoryLaw::degenerate(2)) == 0.0);
  CHECK(prob_regen_at_fixed_time(MemoryLaw::pareto(0.8)) == 0.0);
  // prod_{i>=0} (1 - 2^-(i+1)) is the Euler function at 1/2.
  CHECK(std::abs(prob_regen_at_fixed_time(MemoryLaw::geometric(0.5)) - oracle::euler_phi(0.5)) < 1e-12);
  CHECK(prob_regen_at_fixed_time(MemoryLaw::geometric(0.5)) == doctest::Approx(0.2887880951).epsilon(1e-9));
  CHECK(std::abs(prob_regen_at_fixed_time(MemoryLaw::geometric(0.8)) - oracle::euler_phi(0.8)) < 1e-12);
  // uniform(2): (1/3)(2/3)
  CHECK(prob_regen_at_fixed_time(MemoryLaw::uniform(2)) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("heavy-tailed product agrees with a long direct product") {
  for (double alpha : {2.5, 1.5}) {
    const auto law = MemoryLaw::pareto(alpha);
    double log_p = 0.0;
    const std::int64_t terms = 20'000'000;
    for (std::int64_t i = 0; i < terms; ++i) log_p += std::log1p(-law.tail(i));
    // remaining factors: log prod_{i >= terms} (1 - tail(i)) ~ -sum_{i >= terms} tail(i)
    log_p -= law.tail_sum_from(terms);
    CHECK(std::abs(prob_regen_at_fixed_time(law) - std::exp(log_p)) < 1e-10);
  }
}

TEST_CASE("conditional law of S_1") {
  CHECK(s1_conditional_pmf(MemoryLaw::bernoulli(0.5), 0) == doctest::Approx(1.0));
  CHECK(s1_conditional_pmf(MemoryLaw::bernoulli(0.5), 1) == 0.0);
  const auto g = MemoryLaw::geometric(0.5);
  const double p = prob_regen_at_fixed_time(g);
  CHECK(s1_conditional_pmf(g, 0) == doctest::Approx(0.5 / (1.0 - p)));
  CHECK(s1_conditional_pmf(g, 2) == doctest::Approx(0.5 * 0.75 * 0.125 / (1.0 - p)));
  const auto table = s1_conditional_pmf_table(g, 200);
  double total = 0.0;
  for (double v : table) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < 10; ++k) CHECK(table[k] == doctest::Approx(s1_conditional_pmf(g, k)));
  CHECK_THROWS_AS(s1_conditional_pmf(MemoryLaw::degenerate(0), 0), DomainError);
  CHECK_THROWS_AS(s1_conditional_pmf_table(MemoryLaw::pareto(0.8), 5), DomainError);
}

TEST_CASE("confirmation window is the smallest W with tail(W) < tolerance") {
  for (const auto& law : shipped_laws()) {
    if (!law.moment_finite(1)) continue;
    const auto w = confirmation_window(law, 1e-6);
    CHECK(law.tail(w) < 1e-6);
    if (w > 0) CHECK(law.tail(w - 1) >= 1e-6);
  }
  CHECK(confirmation_window(MemoryLaw::geometric(0.5), 1e-6) == 19);
  CHECK(confirmation_window(MemoryLaw::degenerate(3), 1e-6) == 3);
}

TEST_CASE("sampling consumes exactly one word") {
  for (const auto& law : shipped_laws()) {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) {
      (void)law.sample(a);
      (void)b();
    }
    CHECK(a == b);
  }
}

TEST_CASE("sampler matches the pmf") {
  const std::int64_t draws = 1'000'000;
  for (const auto& law : {MemoryLaw::bernoulli(0.5), MemoryLaw::geometric(0.5), MemoryLaw::uniform(6),
                          MemoryLaw::pareto(2.5), MemoryLaw::geometric(0.9)}) {
    Rng rng(2024);
    const int cells = 12;
    std::vector<std::int64_t> counts(cells, 0);
    for (std::int64_t i = 0; i < draws; ++i) {
      const auto k = law.sample(rng);
      if (k < cells) ++counts[k];
    }
    std::vector<double> probs;
    std::vector<std::int64_t> used;
    for (int k = 0; k < cells; ++k) {
      if (law.pmf(k) * draws < 5) break;
      probs.push_back(law.pmf(k));
      used.push_back(counts[k]);
    }
    const auto chi = chi_square_gof(used, probs, draws);
    INFO(law.describe());
    CHECK(chi.p_value > 0.01);
  }
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(MemoryLaw::degenerate(0).sample(rng) == 0);
}

TEST_CASE("pareto draws have tail index alpha") {
  Rng rng(7);
  std::vector<double> xs(1'000'000);
  // P[K + 1 >= x] = x^-alpha at integer x.
  for (auto& x : xs) x = static_cast<double>(MemoryLaw::pareto(2.5).sample(rng)) + 1.0;
  const auto h = hill_tail_index(xs, 0.01);
  CHECK(h.estimate >= 2.2);
  CHECK(h.estimate <= 2.8);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(MemoryLaw::geometric(1.0), UsageError);
  CHECK_THROWS_AS(MemoryLaw::geometric(-0.1), UsageError);
  CHECK_THROWS_AS(MemoryLaw::bernoulli(1.5), UsageError);
  CHECK_THROWS_AS(MemoryLaw::pareto(0.0), UsageError);
  CHECK_THROWS_AS(MemoryLaw::uniform(-1), UsageError);
  CHECK_THROWS_AS(MemoryLaw::degenerate(-2), UsageError);
  CHECK_THROWS_AS(MemoryLaw::from_params("zipf", {}), UsageError);
  CHECK_THROWS_AS(MemoryLaw::from_params("geometric", {}), UsageError);
  CHECK(MemoryLaw::from_params("geometric", {{"p", 0.25}}) == MemoryLaw::geometric(0.25));
  CHECK(MemoryLaw::from_params("bernoulli", {{"p", 0.25}}) == MemoryLaw::bernoulli(0.25));
  CHECK(MemoryLaw::from_params("pareto", {{"alpha", 3.0}}).describe() == "pareto(alpha=3)");
}
