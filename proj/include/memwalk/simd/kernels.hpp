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

// Data-parallel integer kernels behind the ensemble statistics and the
// regeneration detector. Every kernel has a scalar reference and, on x86-64,
// an AVX2 variant; the variant is picked once at startup from CPUID and can
// be pinned with MEMWALK_SIMD=scalar|avx2. All kernels are exact integer
// arithmetic, so the variants agree bit for bit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace memwalk::simd {

enum class Isa { kScalar, kAvx2 };

std::string to_string(Isa isa);

using Int128 = __int128;

struct KernelTable {
  Isa isa;
  /// max_i |x[i]| (INT64_MIN counts as INT64_MAX).
  std::uint64_t (*max_abs)(const std::int64_t* x, std::size_t n);
  /// acc[i] += x[i]^2. Requires |x[i]| < 2^31.
  void (*accumulate_squares)(const std::int64_t* x, std::int64_t* acc, std::size_t n);
  /// sum_i x[i]. Requires |x[i]| * block < 2^63.
  Int128 (*sum)(const std::int64_t* x, std::size_t n, std::size_t block);
  /// sum_i x[i] y[i]. Requires |x|,|y| < 2^31 and max|x y| * block < 2^63.
  Int128 (*dot)(const std::int64_t* x, const std::int64_t* y, std::size_t n, std::size_t block);
  /// flags[j] = 1 iff min_{j <= l < n} (l - k[l]) >= j, else 0.
  void (*regen_flags)(const std::int64_t* k, std::uint8_t* flags, std::size_t n);
};

const KernelTable& scalar_kernels();
/// nullptr when the build has no AVX2 variant.
const KernelTable* avx2_kernels();
bool cpu_has_avx2();

/// Table chosen at first use (CPUID, then MEMWALK_SIMD override).
const KernelTable& active_kernels();

// Checked entry points. They validate the preconditions above and route to
// the scalar reference when an input is out of the vector range.
std::uint64_t max_abs(std::span<const std::int64_t> x, const KernelTable& t = active_kernels());
void accumulate_squares(std::span<const std::int64_t> x, std::span<std::int64_t> acc,
                        const KernelTable& t = active_kernels());
Int128 sum(std::span<const std::int64_t> x, const KernelTable& t = active_kernels());
Int128 dot(std::span<const std::int64_t> x, std::span<const std::int64_t> y,
           const KernelTable& t = active_kernels());
void regen_flags(std::span<const std::int64_t> k, std::span<std::uint8_t> flags,
                 const KernelTable& t = active_kernels());

inline double to_double(Int128 v) { return static_cast<double>(v); }

}  // namespace memwalk::simd
