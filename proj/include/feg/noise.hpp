#pragma once
// Zero-mean oracle noise with a per-query variance schedule.
//
// Oracle queries happen at half-integer indices 0, 1, 3/2, 2, 5/2, ...; to
// keep the API integral, the schedule and all query functions use *twice*
// the half-index (so query index k maps to 2k and k+1/2 maps to 2k+1).
// Draws are pure functions of (seed, trial, twice_index, coordinate), so
// replays and parallel trials are deterministic by construction.

#include "feg/core.hpp"

#include <cstdint>
#include <vector>

namespace feg {

struct VarianceSchedule {
  // variance at twice-index t, NaN where undefined
  std::vector<double> s2;

  bool defined(int twice_index) const;
  // Total variance sigma^2 for the query at half-index twice_index/2.
  // Throws std::out_of_range when undefined at that index.
  double at_twice(int twice_index) const;
  bool all_zero() const;

  // sigma_0^2 = eps/6, sigma_k^2 = eps/(6k), sigma_{k+1/2}^2 = eps/(6(k+1))
  // for 1 <= k < K. This is the schedule under which the expected
  // squared-gradient bound telescopes to 4 L^2 D^2 / k^2 + eps.
  static VarianceSchedule for_epsilon(double eps, int K);
  static VarianceSchedule constant(double s2, int K);
  static VarianceSchedule zero(int K);
};

enum class NoiseFamily { gaussian_iid, rademacher_scaled };

struct NoiseModel {
  NoiseFamily family = NoiseFamily::gaussian_iid;
  VarianceSchedule schedule;
  std::uint64_t seed = 0;
};

// The raw noise vector xi for one query: E[xi] = 0, E[|xi|^2] = sigma^2
// (each coordinate carries sigma^2/d). Exact zero vector when sigma^2 == 0.
Vec noise_draw(const NoiseModel& noise, int dim, int twice_index,
               std::uint64_t trial);

// F z + xi. When sigma^2 == 0 at this index the exact operator value is
// returned unchanged (bitwise). Throws when the schedule is undefined at
// twice_index. Pass xi_out to also receive the drawn noise vector.
Vec noisy_eval(const OperatorHandle& F, const NoiseModel& noise, const Vec& z,
               int twice_index, std::uint64_t trial, Vec* xi_out = nullptr);

VarianceSchedule schedule_for_epsilon(double eps, int K);

}  // namespace feg
