// Copyright (c) the BranchBench authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace branchbench {

// splitmix64 finalizer. All randomness in the artifact goes through this so
// output is identical across platforms and standard library versions.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Counter-based cell hash: a pure function of (seed, a, b, c), so any cell
// can be generated independently and in any order.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a,
                                     std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix64(seed ^ 0xA0761D6478BD642Full);
  h = mix64(h ^ (a + 0x8EBC6AF09C88C6E3ull));
  h = mix64(h ^ (b + 0x589965CC75374CC3ull));
  h = mix64(h ^ (c + 0x1D8E4E27C47D124Full));
  return h;
}

// Sequential stream built on the same mixer; used where draw order is
// naturally serial (per-worker decisions in the drivers).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0xD1B54A32D192ED03ull)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  // Uniform in [0, n). n must be > 0. Modulo bias is irrelevant at the
  // ranges used here (n << 2^64).
  std::uint64_t uniform(std::uint64_t n) { return next_u64() % n; }

  // Uniform in [lo, hi] inclusive.
  std::int64_t uniform_range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(uniform(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // True with probability p.
  bool chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 < p;
  }

  double uniform_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Derives an independent stream id from structured coordinates.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t domain,
                                    std::uint64_t index) {
  return counter_hash(seed, domain, index, 0x5EEDull);
}

}  // namespace branchbench
