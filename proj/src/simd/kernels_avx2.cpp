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

// Compiled with -mavx2; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <limits>

#include "memwalk/simd/kernels.hpp"

namespace memwalk::simd {

namespace {

inline __m256i min_epi64(__m256i a, __m256i b) {
  return _mm256_blendv_epi8(a, b, _mm256_cmpgt_epi64(a, b));
}

inline __m256i max_epi64(__m256i a, __m256i b) {
  return _mm256_blendv_epi8(b, a, _mm256_cmpgt_epi64(a, b));
}

inline Int128 horizontal_sum(__m256i v) {
  alignas(32) std::int64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return static_cast<Int128>(lanes[0]) + lanes[1] + lanes[2] + lanes[3];
}

std::uint64_t max_abs_avx2(const std::int64_t* x, std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  const __m256i int_max = _mm256_set1_epi64x(std::numeric_limits<std::int64_t>::max());
  __m256i m = zero;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + i));
    const __m256i neg = _mm256_cmpgt_epi64(zero, v);
    __m256i a = _mm256_sub_epi64(_mm256_xor_si256(v, neg), neg);
    // |INT64_MIN| wraps to INT64_MIN, which is the only negative result
    a = _mm256_blendv_epi8(a, int_max, _mm256_cmpgt_epi64(zero, a));
    m = max_epi64(m, a);
  }
  alignas(32) std::int64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), m);
  std::uint64_t r = static_cast<std::uint64_t>(std::max({lanes[0], lanes[1], lanes[2], lanes[3]}));
  for (; i < n; ++i) {
    const std::uint64_t a = x[i] == std::numeric_limits<std::int64_t>::min()
                                ? std::numeric_limits<std::int64_t>::max()
                                : static_cast<std::uint64_t>(x[i] < 0 ? -x[i] : x[i]);
    r = std::max(r, a);
  }
  return r;
}

void accumulate_squares_avx2(const std::int64_t* x, std::int64_t* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + i));
    __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(acc + i));
    a = _mm256_add_epi64(a, _mm256_mul_epi32(v, v));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(acc + i), a);
  }
  for (; i < n; ++i) acc[i] += x[i] * x[i];
}

Int128 sum_avx2(const std::int64_t* x, std::size_t n, std::size_t block) {
  Int128 total = 0;
  std::size_t i = 0;
  while (i + 4 <= n) {
    __m256i s = _mm256_setzero_si256();
    for (std::size_t b = 0; b < block && i + 4 <= n; ++b, i += 4) {
      s = _mm256_add_epi64(s, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + i)));
    }
    total += horizontal_sum(s);
  }
  for (; i < n; ++i) total += x[i];
  return total;
}

Int128 dot_avx2(const std::int64_t* x, const std::int64_t* y, std::size_t n, std::size_t block) {
  Int128 total = 0;
  std::size_t i = 0;
  while (i + 4 <= n) {
    __m256i s = _mm256_setzero_si256();
    for (std::size_t b = 0; b < block && i + 4 <= n; ++b, i += 4) {
      const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + i));
      const __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(y + i));
      s = _mm256_add_epi64(s, _mm256_mul_epi32(a, c));
    }
    total += horizontal_sum(s);
  }
  for (; i < n; ++i) total += static_cast<Int128>(x[i]) * y[i];
  return total;
}

// Backward scan in blocks of four: an in-register suffix minimum over the
// block, then a min against the carry from the blocks above.
void regen_flags_avx2(const std::int64_t* k, std::uint8_t* flags, std::size_t n) {
  std::int64_t carry = std::numeric_limits<std::int64_t>::max();
  std::size_t j = n;
  for (; j % 4 != 0; --j) {
    const std::size_t l = j - 1;
    carry = std::min(carry, static_cast<std::int64_t>(l) - k[l]);
    flags[l] = carry >= static_cast<std::int64_t>(l);
  }
  const __m256i step = _mm256_set_epi64x(3, 2, 1, 0);
  while (j >= 4) {
    j -= 4;
    const __m256i idx = _mm256_add_epi64(_mm256_set1_epi64x(static_cast<std::int64_t>(j)), step);
    __m256i m = _mm256_sub_epi64(idx, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(k + j)));
    m = min_epi64(m, _mm256_permute4x64_epi64(m, _MM_SHUFFLE(3, 3, 2, 1)));
    m = min_epi64(m, _mm256_permute4x64_epi64(m, _MM_SHUFFLE(3, 3, 3, 2)));
    m = min_epi64(m, _mm256_set1_epi64x(carry));
    carry = _mm256_extract_epi64(m, 0);
    const int refuted = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpgt_epi64(idx, m)));
    for (int lane = 0; lane < 4; ++lane) flags[j + lane] = !((refuted >> lane) & 1);
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::kAvx2, &max_abs_avx2, &accumulate_squares_avx2,
                                 &sum_avx2,  &dot_avx2,     &regen_flags_avx2};
  return &table;
}

}  // namespace memwalk::simd
