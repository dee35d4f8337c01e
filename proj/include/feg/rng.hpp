#pragma once
// Counter-keyed deterministic random numbers.
//
// Every draw is a pure function of an explicit 64-bit key, so there is no
// stream state to carry around: noise queries, pair samplers and problem
// generators stay reproducible under any execution order, including
// OpenMP-parallel trials.

#include <cmath>
#include <cstdint>

namespace feg {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Chain several counters into one well-mixed key.
inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t h = splitmix64(a ^ 0x8f1bbcdcbfa53e0bULL);
  h = splitmix64(h ^ (b + 0x2545f4914f6cdd1dULL));
  h = splitmix64(h ^ (c + 0x27d4eb2f165667c5ULL));
  h = splitmix64(h ^ (d + 0x9e3779b97f4a7c15ULL));
  return h;
}

// Uniform in (0, 1]: never returns 0, so log() below is safe.
inline double uniform_pos(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Uniform in [0, 1).
inline double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Standard normal draw for coordinate `c` under key `key`.
// Box-Muller on a per-pair basis: coordinates 2i and 2i+1 share the same
// two uniforms, so a draw depends only on (key, c).
inline double gaussian_at(std::uint64_t key, std::uint64_t c) {
  const std::uint64_t pair = c / 2;
  const double u1 = uniform_pos(splitmix64(key + 2 * pair));
  const double u2 = uniform01(splitmix64(key + 2 * pair + 1));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * 3.14159265358979323846 * u2;
  return (c % 2 == 0) ? r * std::cos(th) : r * std::sin(th);
}

// Rademacher sign (+1/-1) for coordinate `c` under key `key`.
inline double sign_at(std::uint64_t key, std::uint64_t c) {
  return (splitmix64(key + c) & 1ULL) ? 1.0 : -1.0;
}

}  // namespace feg
