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

#include <cstdlib>
#include <limits>
#include <random>
#include <vector>

#include "memwalk/errors.hpp"
#include "memwalk/simd/kernels.hpp"
#include "oracles.hpp"

using namespace memwalk;
using namespace memwalk::simd;

namespace {

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  if (avx2_kernels() && cpu_has_avx2()) out.push_back(avx2_kernels());
  return out;
}

std::vector<std::int64_t> random_ints(std::mt19937_64& g, std::size_t n, std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

}  // namespace

TEST_CASE("dispatch") {
  const auto& active = active_kernels();
  const char* env = std::getenv("MEMWALK_SIMD");
  if (env && std::string(env) == "scalar") {
    CHECK(active.isa == Isa::kScalar);
  } else if (avx2_kernels() && cpu_has_avx2()) {
    CHECK(active.isa == Isa::kAvx2);
  }
  MESSAGE("active kernels: " << to_string(active.isa));
}

TEST_CASE("variants agree on random inputs of every small length") {
  std::mt19937_64 g(1);
  const auto& ref = scalar_kernels();
  for (const auto* t : tables()) {
    for (std::size_t n = 0; n < 70; ++n) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto x = random_ints(g, n, -(1LL << 30), 1LL << 30);
        const auto y = random_ints(g, n, -(1LL << 30), 1LL << 30);
        CHECK(t->max_abs(x.data(), n) == ref.max_abs(x.data(), n));
        CHECK(sum(x, *t) == sum(x, ref));
        CHECK(dot(x, y, *t) == dot(x, y, ref));
        std::vector<std::int64_t> acc_t(n, 7), acc_r(n, 7);
        accumulate_squares(x, acc_t, *t);
        accumulate_squares(x, acc_r, ref);
        CHECK(acc_t == acc_r);
      }
    }
  }
}

TEST_CASE("sums and dots are exact") {
  std::mt19937_64 g(2);
  for (const auto* t : tables()) {
    const auto x = random_ints(g, 100'003, -(1LL << 30), 1LL << 30);
    const auto y = random_ints(g, 100'003, -(1LL << 30), 1LL << 30);
    Int128 s = 0, d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s += x[i];
      d += static_cast<Int128>(x[i]) * y[i];
    }
    CHECK(sum(x, *t) == s);
    CHECK(dot(x, y, *t) == d);
    // values far outside the vector range take the scalar route
    std::vector<std::int64_t> big{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::max(),
                                  -5, 3, 1LL << 62};
    Int128 bs = 0;
    for (auto v : big) bs += v;
    CHECK(sum(big, *t) == bs);
    const std::vector<std::int64_t> wide{1LL << 62, -(1LL << 62), 7, 3};
    CHECK(dot(wide, wide, *t) == (static_cast<Int128>(1) << 125) + 58);
  }
}

TEST_CASE("max_abs edge values") {
  for (const auto* t : tables()) {
    std::vector<std::int64_t> v(9, 1);
    v[8] = std::numeric_limits<std::int64_t>::min();
    CHECK(max_abs(v, *t) == static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()));
    CHECK(max_abs(std::vector<std::int64_t>{}, *t) == 0);
    CHECK(max_abs(std::vector<std::int64_t>{-3, 2, 1, 0, -1}, *t) == 3);
  }
}

TEST_CASE("accumulate_squares guards its range") {
  std::vector<std::int64_t> x{1LL << 31};
  std::vector<std::int64_t> acc(1, 0);
  CHECK_THROWS_AS(accumulate_squares(x, acc), DomainError);
  std::vector<std::int64_t> acc2(2, 0);
  CHECK_THROWS_AS(accumulate_squares(std::vector<std::int64_t>{1}, acc2), UsageError);
}

TEST_CASE("regeneration flags agree with brute force") {
  std::mt19937_64 g(3);
  for (const auto* t : tables()) {
    for (std::size_t n = 1; n < 300; n += 1 + n / 10) {
      for (std::int64_t kmax : {0, 1, 3, 20}) {
        const auto k = random_ints(g, n, 0, kmax);
        std::vector<std::uint8_t> flags(n);
        regen_flags(k, flags, *t);
        const auto brute = oracle::brute_force_regens(k, 0);
        std::vector<std::uint8_t> want(n, 0);
        for (auto i : brute) want[i] = 1;
        // index 0 is flagged iff every l - K_l >= 0
        bool zero_ok = true;
        for (std::size_t l = 0; l < n; ++l) zero_ok = zero_ok && static_cast<std::int64_t>(l) - k[l] >= 0;
        want[0] = zero_ok;
        CHECK(flags == want);
      }
    }
    std::vector<std::uint8_t> wrong(3);
    CHECK_THROWS_AS(regen_flags(std::vector<std::int64_t>{0, 1}, wrong, *t), UsageError);
    std::vector<std::uint8_t> two(2);
    CHECK_THROWS_AS(regen_flags(std::vector<std::int64_t>{0, -1}, two, *t), UsageError);
  }
}
