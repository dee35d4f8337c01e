#pragma once
// Certificates for solver runs.
//
// Four independent machine checks:
//  * a potential-function ledger: coefficients (a_k, b_k) built by recursion
//    from the step schedule, the admissibility conditions they require, and
//    the value V_k = a_k |F z_k|^2 - b_k <F z_k, z_0 - z_k> re-evaluated
//    from the stored iterates;
//  * closed-form worst-case rate bounds for each method with a published
//    guarantee, as plain arithmetic oracles;
//  * sampling estimators for the smoothness and comonotonicity constants
//    (one-sided by construction: max/min over sampled pairs);
//  * a span checker verifying the trajectory stays in z_0 + span of the
//    operator values seen so far.
// certify_run drives all of them over a finished run and reports
// pass/fail/skipped per certificate.

#include "feg/core.hpp"
#include "feg/noise.hpp"
#include "feg/solvers.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace feg {

// ---------------------------------------------------------------- potential

using LocalSmoothness = std::function<double(int)>;  // k -> L_k > 0

// Coefficients by recursion:
//   b_0 = 0, b_1 = 1, b_{k+1} = b_k/(1 - beta_k) for k >= 1;
//   a_0 = alpha_0 (L_0^2 alpha_0^2 - 1)/2;
//   a_k = (b_k (1 - beta_k)/(2 beta_k))(alpha_k + 2 rho_k) - b_k rho_k.
std::pair<double, double> potential_coefficients(const StepSchedule& sched,
                                                 const LocalSmoothness& L_seq,
                                                 int k);

struct PotentialLedger {
  std::vector<double> a, b;  // index 0..K
};
PotentialLedger build_potential_ledger(const StepSchedule& sched,
                                       const LocalSmoothness& L_seq, int K);

// True iff beta_0 = 1, beta_k in (0,1) for 1 <= k <= K, alpha_k in
// (0, 1/L_k] for 0 <= k <= K, and the one-step coefficient inequality
//   ((1-beta_{k+1})/(2 beta_{k+1}))(alpha_{k+1} + 2 rho_{k+1}) - rho_{k+1}
//     <= (1/(2 beta_k))(alpha_k + 2 rho_k) - rho_k
// holds for all 0 <= k < K, each comparison at tolerance 1e-12.
bool check_schedule_admissible(const StepSchedule& sched,
                               const LocalSmoothness& L_seq, int K);

// V_k from one fresh operator evaluation at the stored iterate.
double evaluate_potential(const Trace& trace, const PotentialLedger& ledger,
                          const ProblemSpec& problem, int k);

// V_0..V_K in one sweep. The parallel kernel writes one slot per k, so it
// produces exactly the plain-loop reference values.
std::vector<double> potential_series(const Trace& trace,
                                     const PotentialLedger& ledger,
                                     const ProblemSpec& problem,
                                     int threads = 0);
std::vector<double> potential_series_serial(const Trace& trace,
                                            const PotentialLedger& ledger,
                                            const ProblemSpec& problem);

// -------------------------------------------------------------- rate bounds
// D = |z_0 - z_*| throughout; all bounds are for k >= 1.

// 4 D^2 / ((1/L + 2 rho)^2 k^2); requires rho > -1/(2L).
double bound_feg(double L, double rho, double D, int k);
// 4 D^2 / (((k-1)(1-delta) + 1)^2 ((1-delta)/L + 2 rho)^2);
// requires rho > -(1-delta)/(2L).
double bound_fega(double L, double rho, double delta, double D, int k);
// 4 L^2 D^2/k^2
//   + (6/k^2)(sigma_0^2 + sum_{l=1}^{k-1} (l^2 sigma_l^2
//                                          + (l+1)^2 sigma_{l+1/2}^2)).
double bound_sfeg(double L, double D, const VarianceSchedule& sigmas, int k);
// 260 L^2 D^2 / (k+1)^2.
double bound_eag_c(double L, double D, int k);
// 27 L^2 D^2 / ((k+1)(k+2)).
double bound_eag_v(double L, double D, int k);

// -------------------------------------------------------- constant sampling

// Seeded uniform sampler over the box [center_i - radius, center_i + radius].
struct PairSampler {
  Vec center;
  double radius = 1.0;
  std::uint64_t seed = 0;
};

// max over sampled pairs of |Fz - Fz'| / |z - z'|, skipping pairs with
// |z - z'| < 1e-12; never exceeds the true smoothness constant.
double estimate_lipschitz(const OperatorHandle& F, const PairSampler& sampler,
                          long pairs, int threads = 0);
double estimate_lipschitz_serial(const OperatorHandle& F,
                                 const PairSampler& sampler, long pairs);

// min over sampled pairs of <Fz - Fz', z - z'> / |Fz - Fz'|^2, skipping
// pairs with |Fz - Fz'| < 1e-12; never falls below the true level.
double estimate_comonotonicity(const OperatorHandle& F,
                               const PairSampler& sampler, long pairs,
                               int threads = 0);
double estimate_comonotonicity_serial(const OperatorHandle& F,
                                      const PairSampler& sampler, long pairs);

// --------------------------------------------------------------------- span

// True iff every iterate and half-iterate z in the trace satisfies
// z in z_0 + span{F p : p a trace point up to and including z}, with
// least-squares residual <= 1e-8 (1 + |z - z_0|). Requires dim <= 16.
bool check_span(const Trace& trace, const OperatorHandle& F);

// -------------------------------------------------------------- certificate

enum class CertStatus { pass, fail, skipped };
const char* cert_status_name(CertStatus s);

struct StepCertificate {
  int k = 0;
  double grad_norm_sq = 0.0;         // fresh |F z_k|^2
  std::optional<double> bound;       // rate bound at k (k >= 1, if it applies)
  std::optional<double> potential;   // V_k (if the ledger applies)
  bool bound_ok = true;              // grad_norm_sq <= bound (1 + 1e-9)
  bool potential_link_ok = true;     // V_k <= V_{k-1} + 1e-9 (1 + |V_{k-1}|)
  bool potential_chain_ok = true;    // V_k <= V_1 + 1e-9 (1 + |V_1|); V_1 <= 1e-9
  bool local_ok = true;              // one-step Lipschitz + comonotone checks
};

struct CertificateReport {
  CertStatus potential = CertStatus::skipped;
  CertStatus bound = CertStatus::skipped;
  CertStatus span = CertStatus::skipped;
  std::vector<StepCertificate> steps;  // k = 0..K
  double bound_ratio_max = 0.0;        // max over k >= 1 of grad/bound; 0 if none
  std::string notes;                   // reasons for skips and logged local misses
  bool all_pass() const {
    return potential != CertStatus::fail && bound != CertStatus::fail &&
           span != CertStatus::fail;
  }
};

// Runs every applicable certificate against the finished run. A potential
// link (V_k vs V_{k-1}) only counts as a failure when the one-step local
// conditions verified from the trace actually hold at that step; a link
// miss without them is logged in notes instead.
CertificateReport certify_run(const RunHandle& run, int threads = 0);

// The realized step schedule of a finished run, extended past the last
// committed step by repeating it (so potential coefficients exist at the
// final iterate). For adaptive runs L_k = 1/tau_k.
std::pair<StepSchedule, LocalSmoothness> schedule_of_run(const RunHandle& run);

}  // namespace feg
