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

#include <cstdlib>
#include <limits>
#include <string>

#include "memwalk/errors.hpp"
#include "memwalk/simd/kernels.hpp"

namespace memwalk::simd {

#ifndef MEMWALK_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

std::string to_string(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

bool cpu_has_avx2() {
#if defined(MEMWALK_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& active_kernels() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* env = std::getenv("MEMWALK_SIMD");
    const std::string want = env ? env : "auto";
    if (want == "scalar") return scalar_kernels();
    if (avx2_kernels() && cpu_has_avx2()) return *avx2_kernels();
    return scalar_kernels();
  }();
  return table;
}

namespace {

constexpr std::uint64_t kMul32Limit = std::uint64_t{1} << 31;
constexpr std::uint64_t kI64Max = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());

std::size_t block_for(std::uint64_t term_bound) {
  if (term_bound == 0) return std::numeric_limits<std::size_t>::max();
  const std::uint64_t b = kI64Max / term_bound;
  return b == 0 ? 0 : static_cast<std::size_t>(b);
}

}  // namespace

std::uint64_t max_abs(std::span<const std::int64_t> x, const KernelTable& t) {
  return t.max_abs(x.data(), x.size());
}

void accumulate_squares(std::span<const std::int64_t> x, std::span<std::int64_t> acc,
                        const KernelTable& t) {
  if (x.size() != acc.size()) throw UsageError("accumulate_squares: length mismatch");
  if (t.max_abs(x.data(), x.size()) >= kMul32Limit) {
    throw DomainError("accumulate_squares: |x| >= 2^31 overflows exact squared norms");
  }
  t.accumulate_squares(x.data(), acc.data(), x.size());
}

Int128 sum(std::span<const std::int64_t> x, const KernelTable& t) {
  const std::size_t block = block_for(t.max_abs(x.data(), x.size()));
  if (block == 0) return scalar_kernels().sum(x.data(), x.size(), 0);
  return t.sum(x.data(), x.size(), block);
}

Int128 dot(std::span<const std::int64_t> x, std::span<const std::int64_t> y, const KernelTable& t) {
  if (x.size() != y.size()) throw UsageError("dot: length mismatch");
  const std::uint64_t mx = t.max_abs(x.data(), x.size());
  const std::uint64_t my = t.max_abs(y.data(), y.size());
  if (mx >= kMul32Limit || my >= kMul32Limit) return scalar_kernels().dot(x.data(), y.data(), x.size(), 0);
  const std::size_t block = block_for(mx * my);
  if (block == 0) return scalar_kernels().dot(x.data(), y.data(), x.size(), 0);
  return t.dot(x.data(), y.data(), x.size(), block);
}

void regen_flags(std::span<const std::int64_t> k, std::span<std::uint8_t> flags, const KernelTable& t) {
  if (k.size() != flags.size()) throw UsageError("regen_flags: length mismatch");
  for (auto v : k) {
    if (v < 0) throw UsageError("regen_flags: negative memory length");
  }
  t.regen_flags(k.data(), flags.data(), k.size());
}

}  // namespace memwalk::simd
