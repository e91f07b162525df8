#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "magpi/common.hpp"

namespace magpi {

// Counter-based RNG (Philox-4x32-10).  Every random number is a pure
// function of (seed, sample index, step, slot), so Monte Carlo results are
// reproducible bit-for-bit regardless of thread count or evaluation order.

namespace detail {

inline void mulhilo32(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  const uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace detail

inline std::array<uint32_t, 4> philox4x32(uint64_t key,
                                          std::array<uint32_t, 4> ctr) {
  constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo32(M0, ctr[0], hi0, lo0);
    detail::mulhilo32(M1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    k0 += W0;
    k1 += W1;
  }
  return ctr;
}

// Strictly-in-(0,1) uniform from two 32-bit words; never returns 0 or 1,
// so it is safe under log().
inline double to_unit_interval(uint32_t hi, uint32_t lo) {
  const uint64_t bits = (static_cast<uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Two independent standard normals addressed by (seed, sample, step, slot).
inline std::array<double, 2> normal_pair(uint64_t seed, uint64_t sample,
                                         uint32_t step, uint32_t slot) {
  const std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(sample),
                                       static_cast<uint32_t>(sample >> 32),
                                       step, slot};
  const auto r = philox4x32(seed, ctr);
  const double u1 = to_unit_interval(r[0], r[1]);
  const double u2 = to_unit_interval(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  return {rad * std::cos(2.0 * pi * u2), rad * std::sin(2.0 * pi * u2)};
}

// Three standard normals for one Brownian step (fourth draw discarded).
inline Vec3 normal_triple(uint64_t seed, uint64_t sample, uint32_t step) {
  const auto ab = normal_pair(seed, sample, 2 * step, 0);
  const auto cd = normal_pair(seed, sample, 2 * step, 1);
  return {ab[0], ab[1], cd[0]};
}

// Van der Corput radical inverse; halton(i, b) for distinct primes b gives
// a low-discrepancy sequence in [0,1).  Used for deterministic sup-norm
// sampling of almost-periodic fields.
inline double halton(uint64_t index, uint32_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

}  // namespace magpi
