#pragma once
// Stochastic-oracle variant of the anchored extragradient method (s-feg) and
// Monte Carlo estimators for its expectation-level guarantees.
//
// s-feg runs the unit-step anchored schedule (alpha = 1/L, beta_k = 1/(k+1))
// against a noisy oracle G(z) = F(z) + xi. Iteration 0 makes a single query
// (its half-iterate coincides with the anchor); every later iteration makes
// two, so a K-iteration run consumes exactly 2K - 1 queries. Query noise is
// indexed on the doubled time grid: the iterate query of iteration k draws
// at twice-index 2k and the half-iterate query at 2k + 1 (see noise.hpp).
//
// Trace conventions: grad_norm_sq holds noise-free re-evaluations |F z_k|^2
// (diagnostics, never charged to oracle_calls); oracle_calls counts noisy
// queries only.

#include "feg/core.hpp"
#include "feg/noise.hpp"
#include "feg/solvers.hpp"

#include <cstdint>
#include <vector>

namespace feg {

// Requires problem.lipschitz; the variance schedule must cover every query
// the run will make. With record_noise, the realized noise vectors are kept
// in the handle as (twice_index, xi) pairs in query order.
RunHandle run_sfeg(const ProblemSpec& problem, const NoiseModel& noise,
                   const Vec& z0, int K, std::uint64_t trial = 0,
                   bool record_noise = false);

// Monte Carlo mean of the noise-free |F z_k|^2 series over independent
// trials (trial indices 0 .. trials-1).
struct McSeries {
  std::vector<double> mean;  // index k = 0 .. K
  std::vector<double> sem;   // standard error of each mean
  long trials = 0;
};
McSeries mc_grad_series(const ProblemSpec& problem, const NoiseModel& noise,
                        const Vec& z0, int K, long trials, int threads = 0);
// Plain-loop reference producing identical values.
McSeries mc_grad_series_serial(const ProblemSpec& problem,
                               const NoiseModel& noise, const Vec& z0, int K,
                               long trials);

struct MeanEstimate {
  double mean = 0.0;
  double sem = 0.0;
  long trials = 0;
};

// E <F p, xi> where p is the trajectory point with doubled index point_twice
// (2m -> z_m, 2m+1 -> z_{m+1/2}, both with exact F) and xi is the noise
// realization drawn at noise_twice. K must cover both indices.
MeanEstimate estimate_noise_cross_term(const ProblemSpec& problem,
                                       const NoiseModel& noise, const Vec& z0,
                                       int K, int point_twice, int noise_twice,
                                       long trials, int threads = 0);
MeanEstimate estimate_noise_cross_term_serial(const ProblemSpec& problem,
                                              const NoiseModel& noise,
                                              const Vec& z0, int K,
                                              int point_twice, int noise_twice,
                                              long trials);

// Monte Carlo estimate of E[V_k - V_{k+1}] (the per-step potential decrease)
// for the unit-step anchored potential (a_k = k^2/(2L), b_k = k) evaluated
// with exact F along the stochastic trajectory.
MeanEstimate estimate_potential_gap(const ProblemSpec& problem,
                                    const NoiseModel& noise, const Vec& z0,
                                    int k, long trials, int threads = 0);

// Lower bound on E[V_k - V_{k+1}] under query variances sigmas. Noise can
// push the potential up by at most this much in expectation:
//   k = 0:  -(L^2 a0^3/2 + L a0^2) sigma_0^2                 (a0 = alpha_0)
//   k >= 1: -(k alpha_k (1 + 2 L alpha_k)/(2 beta_k))
//             ((1 - beta_k) sigma_k^2 + sigma_{k+1/2}^2/(1 - beta_k))
// With alpha = 1/L, beta_k = 1/(k+1) this is
// -(3/(2L))(k^2 sigma_k^2 + (k+1)^2 sigma_{k+1/2}^2).
double expected_potential_gap_floor(const StepSchedule& sched, double L,
                                    const VarianceSchedule& sigmas, int k);

}  // namespace feg
