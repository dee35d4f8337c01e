#pragma once
// The anchored extragradient family and its baselines.
//
// The family engine performs, per iteration k (with F z_k evaluated once and
// reused):
//   z_{k+1/2} = z_k + beta_k (z_0 - z_k) - (1-beta_k)(alpha_k + 2 rho_k) F z_k
//   z_{k+1}   = z_k + beta_k (z_0 - z_k) - alpha_k F z_{k+1/2}
//                                        - (1-beta_k) 2 rho_k F z_k
// Members implemented on top of it:
//   feg    alpha_k = 1/L, beta_k = 1/(k+1), rho_k = rho (anchored, fast)
//   feg-a  the backtracking variant that discovers tau_k ~ 1/L and
//          eta_k ~ 1/L + 2 rho online, no knowledge of L or rho
//   s-feg  the stochastic-oracle variant (see stochastic.hpp)
// Baselines with their published parameterizations:
//   eg     plain extragradient (alpha = 1/L both sub-steps)
//   eg+    z_{k+1/2} = z_k - (alpha/beta) F z_k; z_{k+1} = z_k - alpha F z_{k+1/2}
//   eag-c  anchored extra-anchored-gradient, alpha_k = 1/(8L), beta_k = 1/(k+2)
//   eag-v  same skeleton with the recursive alpha_k sequence (alpha_0 = 0.618/L)
//
// Every run returns a RunHandle: the Trace plus everything needed to resume
// the run so that a split run is indistinguishable from a single longer one.

#include "feg/core.hpp"
#include "feg/noise.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace feg {

enum class Method { feg, feg_a, s_feg, eg, eg_plus, eag_c, eag_v };
enum class StopReason { max_iters, stationary, error };
enum class EagVariant { C, V };

// Anchored methods keep pulling toward z_0 even at a stationary point, so a
// transient visit to a zero of F must not terminate them.
bool is_anchored(Method m);

const char* method_name(Method m);
Method method_from_string(const std::string& name);

// Coefficient maps k -> alpha_k, beta_k, rho_k for the family engine.
struct StepSchedule {
  std::function<double(int)> alpha;
  std::function<double(int)> beta;
  std::function<double(int)> rho;
};

// alpha = 1/L, beta_k = 1/(k+1), rho_k = rho.
StepSchedule feg_step_schedule(double L, double rho);

struct Trace {
  std::vector<Vec> iterates;        // z_0 ... z_K
  std::vector<Vec> half_iterates;   // z_{1/2} ... z_{K-1/2}
  std::vector<double> grad_norm_sq; // exact |F z_k|^2 per iterate
  std::vector<double> step_tau;     // committed full-step size per iteration
  std::vector<double> step_eta;     // committed half-step size per iteration
  std::vector<double> alpha_cache;  // eag-v recursion values, kept for resume
  long oracle_calls = 0;            // operator queries consumed by the update
                                    // rule (diagnostic gradient-norm
                                    // measurements are not counted)
  StopReason stop_reason = StopReason::max_iters;
};

// Exact (==) comparison of every field.
bool traces_equal(const Trace& a, const Trace& b);

// A finished run plus the continuation state resume() needs.
struct RunHandle {
  Method method = Method::feg;
  ProblemSpec problem;
  Trace trace;

  double L = 0.0;      // smoothness constant used by the schedule
  double alpha = 0.0;  // fixed step (feg: 1/L; eg+: alpha; eag-c: 1/(8L))
  double beta = 0.0;   // eg+ half-step divisor
  double rho = 0.0;    // comonotonicity level used by feg

  // feg-a state
  double delta = 0.0, tau_init = 0.0, eta_init = 0.0;
  double tau_last = 0.0, eta_last = 0.0;
  long shrink_total = 0;
  std::vector<long> shrinks_per_iter;  // per committed iteration (index 0 = i_0)
  bool has_cached_grad = false;
  Vec cached_grad;  // F at the last iterate (feg-a reuses it across steps)

  // s-feg state
  std::optional<NoiseModel> noise;
  std::uint64_t trial = 0;
  bool record_noise = false;
  std::vector<std::pair<int, Vec>> noise_record;  // (twice_index, xi)
};

// One family-engine step; exactly two operator evaluations.
// Throws std::runtime_error naming k on non-finite intermediates.
std::pair<Vec, Vec> class_feg_step(const Vec& z_k, const Vec& z_0,
                                   const OperatorHandle& F, int k,
                                   const StepSchedule& sched);

// Requires problem.lipschitz and problem.comonotone with rho > -1/(2L).
RunHandle run_feg(const ProblemSpec& problem, const Vec& z0, int K);

// Backtracking variant; uses no knowledge of L or rho. Each candidate pair
// is tested first for the local Lipschitz condition
//   |F z_{k+1} - F z_{k+1/2}| <= (1/tau) |z_{k+1} - z_{k+1/2}|
// and then for the local comonotonicity condition
//   <F z_{k+1} - F z_k, z_{k+1} - z_k> >= ((eta - tau)/2) |F z_{k+1} - F z_k|^2,
// each failure shrinking its own step by (1-delta) before candidates are
// re-formed; ties pass, as do pairs whose separation sits at the rounding
// floor of the iterate scale (the anchor drives the half- and full-iterates
// together, and a coincident pair satisfies both conditions in exact
// arithmetic). Throws after 1e6 total shrinkages.
RunHandle run_feg_a(const OperatorHandle& F, const Vec& z0, double tau_init,
                    double eta_init, double delta, int K);
RunHandle run_feg_a(const ProblemSpec& problem, const Vec& z0, double tau_init,
                    double eta_init, double delta, int K);

RunHandle run_eg_plus(const ProblemSpec& problem, const Vec& z0, int K,
                      double alpha, double beta);
// Plain extragradient: eg+ with beta = 1 and alpha = 1/L.
RunHandle run_eg(const ProblemSpec& problem, const Vec& z0, int K);

RunHandle run_eag(const ProblemSpec& problem, const Vec& z0, int K,
                  EagVariant variant);

// Extend a finished run by `extra` iterations, bitwise-identical to a single
// longer run. A stationary-stopped run is returned unchanged. Throws if the
// handle lacks the required continuation state (e.g. a hand-built feg-a
// handle without its tau/eta state).
void resume(RunHandle& run, int extra);

namespace detail {
void continue_run(RunHandle& run, int target_K);    // feg, eg, eg+, eag-c/v
void continue_feg_a(RunHandle& run, int target_K);
void continue_sfeg(RunHandle& run, int target_K);   // defined in stochastic.cpp
// Family-engine step formulas from precomputed operator values (shared by
// class_feg_step and the runners so both produce identical arithmetic).
Vec feg_half_formula(const Vec& z_k, const Vec& z_0, const Vec& F_k,
                     double alpha, double beta, double rho);
Vec feg_next_formula(const Vec& z_k, const Vec& z_0, const Vec& F_half,
                     const Vec& F_k, double alpha, double beta, double rho);
// Appends the eag-v alpha recursion up to index `upto` inclusive.
void extend_eagv_alphas(std::vector<double>& alphas, double L, int upto);
}  // namespace detail

}  // namespace feg
