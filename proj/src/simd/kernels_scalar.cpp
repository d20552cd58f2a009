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

#include <algorithm>
#include <limits>

#include "memwalk/simd/kernels.hpp"

namespace memwalk::simd {

namespace {

std::uint64_t max_abs_scalar(const std::int64_t* x, std::size_t n) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t a = x[i] == std::numeric_limits<std::int64_t>::min()
                                ? std::numeric_limits<std::int64_t>::max()
                                : static_cast<std::uint64_t>(x[i] < 0 ? -x[i] : x[i]);
    m = std::max(m, a);
  }
  return m;
}

void accumulate_squares_scalar(const std::int64_t* x, std::int64_t* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i] * x[i];
}

Int128 sum_scalar(const std::int64_t* x, std::size_t n, std::size_t) {
  Int128 s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

Int128 dot_scalar(const std::int64_t* x, const std::int64_t* y, std::size_t n, std::size_t) {
  Int128 s = 0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<Int128>(x[i]) * y[i];
  return s;
}

void regen_flags_scalar(const std::int64_t* k, std::uint8_t* flags, std::size_t n) {
  std::int64_t suffix_min = std::numeric_limits<std::int64_t>::max();
  for (std::size_t j = n; j-- > 0;) {
    suffix_min = std::min(suffix_min, static_cast<std::int64_t>(j) - k[j]);
    flags[j] = suffix_min >= static_cast<std::int64_t>(j);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::kScalar,     &max_abs_scalar, &accumulate_squares_scalar,
                                 &sum_scalar,      &dot_scalar,     &regen_flags_scalar};
  return table;
}

}  // namespace memwalk::simd
