#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sembridge::rng {

// Stateless counter-based generator: every draw is a pure function of
// (seed, stream, a, b, lane). Results never depend on evaluation order, so
// parallel schedules reproduce serial ones exactly.

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                                   std::uint64_t lane = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return mix64(h ^ lane);
}

/// Uniform in the open interval (0, 1).
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                      std::uint64_t lane = 0) {
  const std::uint64_t bits = key(seed, stream, a, b, lane) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two independent lanes.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
  const double u1 = uniform(seed, stream, a, b, 0);
  const double u2 = uniform(seed, stream, a, b, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform integer in [0, n). Bias is below 2^-40 for n < 2^24.
inline std::uint64_t below(std::uint64_t n, std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                           std::uint64_t b) {
  return static_cast<std::uint64_t>(uniform(seed, stream, a, b, 2) * static_cast<double>(n)) % n;
}

/// Stream identifiers. Distinct entity kinds never share draws.
enum Stream : std::uint64_t {
  random_init = 1,
  univariate_init = 2,
  multivariate_init = 3,
  fallback_random = 4,
  world_source_bridge = 16,
  world_source_embedding = 17,
  world_target_noise = 18,
  world_alignment = 19,
  world_doc_tokens = 20,
  world_query = 21,
};

}  // namespace sembridge::rng
