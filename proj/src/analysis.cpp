#include "feg/analysis.hpp"

#include "feg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace feg {

namespace {

constexpr double coeff_tol = 1e-12;  // algebraic identities
constexpr double cert_tol = 1e-9;    // certificates over long runs

void validate_maps(const StepSchedule& sched, const LocalSmoothness& L_seq,
                   const char* who) {
  if (!sched.alpha || !sched.beta || !sched.rho || !L_seq)
    throw std::invalid_argument(std::string(who) +
                                ": schedule and smoothness maps must be set");
}

// Runs fn(i) for i = 0..n-1; every call writes only its own slots, so the
// parallel schedule cannot change any value. threads == 1 forces the loop.
template <class Fn>
void for_slots(long n, int threads, Fn&& fn) {
#ifdef _OPENMP
  if (threads != 1) {
    const int nt = threads > 0 ? threads : omp_get_max_threads();
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
#pragma omp critical
        {
          if (!err) err = std::current_exception();
        }
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  for (long i = 0; i < n; ++i) fn(i);
}

double coeff_a(double b, double alpha, double beta, double rho) {
  return b * (1.0 - beta) / (2.0 * beta) * (alpha + 2.0 * rho) - b * rho;
}

double coeff_a0(double alpha0, double L0) {
  return alpha0 * (L0 * L0 * alpha0 * alpha0 - 1.0) / 2.0;
}

}  // namespace

std::pair<double, double> potential_coefficients(const StepSchedule& sched,
                                                 const LocalSmoothness& L_seq,
                                                 int k) {
  validate_maps(sched, L_seq, "potential_coefficients");
  if (k < 0)
    throw std::invalid_argument("potential_coefficients: k must be nonnegative");
  if (k == 0) return {coeff_a0(sched.alpha(0), L_seq(0)), 0.0};
  double b = 1.0;
  for (int j = 1; j < k; ++j) b = b / (1.0 - sched.beta(j));
  return {coeff_a(b, sched.alpha(k), sched.beta(k), sched.rho(k)), b};
}

PotentialLedger build_potential_ledger(const StepSchedule& sched,
                                       const LocalSmoothness& L_seq, int K) {
  validate_maps(sched, L_seq, "build_potential_ledger");
  if (K < 0)
    throw std::invalid_argument("build_potential_ledger: K must be nonnegative");
  PotentialLedger led;
  led.a.resize(static_cast<std::size_t>(K) + 1);
  led.b.resize(static_cast<std::size_t>(K) + 1);
  led.a[0] = coeff_a0(sched.alpha(0), L_seq(0));
  led.b[0] = 0.0;
  double b = 1.0;
  for (int k = 1; k <= K; ++k) {
    if (k >= 2) b = b / (1.0 - sched.beta(k - 1));
    led.b[static_cast<std::size_t>(k)] = b;
    led.a[static_cast<std::size_t>(k)] =
        coeff_a(b, sched.alpha(k), sched.beta(k), sched.rho(k));
  }
  return led;
}

bool check_schedule_admissible(const StepSchedule& sched,
                               const LocalSmoothness& L_seq, int K) {
  validate_maps(sched, L_seq, "check_schedule_admissible");
  if (K < 1)
    throw std::invalid_argument("check_schedule_admissible: K must be at least 1");
  if (std::abs(sched.beta(0) - 1.0) > coeff_tol) return false;
  for (int k = 0; k <= K; ++k) {
    const double alpha = sched.alpha(k);
    const double Lk = L_seq(k);
    if (!(alpha > 0.0) || !std::isfinite(alpha)) return false;
    if (!(Lk > 0.0) || !std::isfinite(Lk)) return false;
    if (alpha > (1.0 + coeff_tol) / Lk) return false;
    if (k >= 1) {
      const double beta = sched.beta(k);
      if (!(beta > 0.0) || !(beta < 1.0)) return false;
    }
    if (!std::isfinite(sched.rho(k))) return false;
  }
  for (int k = 0; k < K; ++k) {
    const double bn = sched.beta(k + 1);
    const double lhs = (1.0 - bn) / (2.0 * bn) *
                           (sched.alpha(k + 1) + 2.0 * sched.rho(k + 1)) -
                       sched.rho(k + 1);
    const double rhs =
        (sched.alpha(k) + 2.0 * sched.rho(k)) / (2.0 * sched.beta(k)) -
        sched.rho(k);
    if (lhs > rhs + coeff_tol * (1.0 + std::abs(rhs))) return false;
  }
  return true;
}

double evaluate_potential(const Trace& trace, const PotentialLedger& ledger,
                          const ProblemSpec& problem, int k) {
  if (k < 0 || k >= static_cast<int>(trace.iterates.size()))
    throw std::out_of_range("evaluate_potential: iterate index out of range");
  if (k >= static_cast<int>(ledger.a.size()) ||
      k >= static_cast<int>(ledger.b.size()))
    throw std::out_of_range("evaluate_potential: ledger does not cover k");
  const Vec& zk = trace.iterates[static_cast<std::size_t>(k)];
  const Vec& z0 = trace.iterates.front();
  Vec Fk = evaluate_operator(problem.op, zk);
  Vec d0 = z0 - zk;
  return ledger.a[static_cast<std::size_t>(k)] * Fk.squaredNorm() -
         ledger.b[static_cast<std::size_t>(k)] * Fk.dot(d0);
}

std::vector<double> potential_series(const Trace& trace,
                                     const PotentialLedger& ledger,
                                     const ProblemSpec& problem, int threads) {
  const long n = static_cast<long>(trace.iterates.size());
  if (static_cast<long>(ledger.a.size()) < n ||
      static_cast<long>(ledger.b.size()) < n)
    throw std::out_of_range("potential_series: ledger does not cover the trace");
  std::vector<double> V(static_cast<std::size_t>(n));
  for_slots(n, threads, [&](long k) {
    V[static_cast<std::size_t>(k)] =
        evaluate_potential(trace, ledger, problem, static_cast<int>(k));
  });
  return V;
}

std::vector<double> potential_series_serial(const Trace& trace,
                                            const PotentialLedger& ledger,
                                            const ProblemSpec& problem) {
  return potential_series(trace, ledger, problem, 1);
}

namespace {

void validate_bound_args(double L, double D, int k, const char* who) {
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument(std::string(who) +
                                ": L must be positive and finite");
  if (!(D >= 0.0) || !std::isfinite(D))
    throw std::invalid_argument(std::string(who) +
                                ": D must be nonnegative and finite");
  if (k < 1)
    throw std::invalid_argument(std::string(who) + ": k must be positive");
}

}  // namespace

double bound_feg(double L, double rho, double D, int k) {
  validate_bound_args(L, D, k, "bound_feg");
  if (!(rho > -0.5 / L))
    throw std::invalid_argument("bound_feg: requires rho > -1/(2L)");
  const double s = 1.0 / L + 2.0 * rho;
  const double kk = static_cast<double>(k);
  return 4.0 * D * D / (s * s * kk * kk);
}

double bound_fega(double L, double rho, double delta, double D, int k) {
  validate_bound_args(L, D, k, "bound_fega");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("bound_fega: delta must lie strictly in (0, 1)");
  if (!(rho > -(1.0 - delta) / (2.0 * L)))
    throw std::invalid_argument("bound_fega: requires rho > -(1-delta)/(2L)");
  const double q = (static_cast<double>(k) - 1.0) * (1.0 - delta) + 1.0;
  const double s = (1.0 - delta) / L + 2.0 * rho;
  return 4.0 * D * D / (q * q * s * s);
}

double bound_sfeg(double L, double D, const VarianceSchedule& sigmas, int k) {
  validate_bound_args(L, D, k, "bound_sfeg");
  const double kk = static_cast<double>(k);
  double acc = sigmas.at_twice(0);
  for (int l = 1; l < k; ++l) {
    const double ll = static_cast<double>(l);
    acc += ll * ll * sigmas.at_twice(2 * l);
    acc += (ll + 1.0) * (ll + 1.0) * sigmas.at_twice(2 * l + 1);
  }
  return 4.0 * L * L * D * D / (kk * kk) + 6.0 * acc / (kk * kk);
}

double bound_eag_c(double L, double D, int k) {
  validate_bound_args(L, D, k, "bound_eag_c");
  const double kk = static_cast<double>(k);
  return 260.0 * L * L * D * D / ((kk + 1.0) * (kk + 1.0));
}

double bound_eag_v(double L, double D, int k) {
  validate_bound_args(L, D, k, "bound_eag_v");
  const double kk = static_cast<double>(k);
  return 27.0 * L * L * D * D / ((kk + 1.0) * (kk + 2.0));
}

namespace {

Vec sample_box_point(const PairSampler& sampler, int dim, long pair, int which) {
  Vec z(dim);
  for (int i = 0; i < dim; ++i) {
    const double u = uniform01(mix_key(sampler.seed, static_cast<std::uint64_t>(pair),
                                       static_cast<std::uint64_t>(which),
                                       static_cast<std::uint64_t>(i)));
    z[i] = sampler.center[i] + sampler.radius * (2.0 * u - 1.0);
  }
  return z;
}

double estimate_extreme(const OperatorHandle& F, const PairSampler& sampler,
                        long pairs, int threads, bool lipschitz) {
  const char* who = lipschitz ? "estimate_lipschitz" : "estimate_comonotonicity";
  if (pairs < 1)
    throw std::invalid_argument(std::string(who) + ": need at least one pair");
  if (static_cast<int>(sampler.center.size()) != F.dim)
    throw std::invalid_argument(std::string(who) +
                                ": sampler center dimension mismatch");
  if (!(sampler.radius > 0.0) || !std::isfinite(sampler.radius))
    throw std::invalid_argument(std::string(who) +
                                ": sampler radius must be positive and finite");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> vals(static_cast<std::size_t>(pairs), nan);
  for_slots(pairs, threads, [&](long p) {
    Vec z = sample_box_point(sampler, F.dim, p, 0);
    Vec w = sample_box_point(sampler, F.dim, p, 1);
    Vec dz = z - w;
    Vec dF = evaluate_operator(F, z) - evaluate_operator(F, w);
    if (lipschitz) {
      const double n = dz.norm();
      if (n < 1e-12) return;  // degenerate pair, skipped
      vals[static_cast<std::size_t>(p)] = dF.norm() / n;
    } else {
      const double n2 = dF.squaredNorm();
      if (std::sqrt(n2) < 1e-12) return;  // degenerate pair, skipped
      vals[static_cast<std::size_t>(p)] = dF.dot(dz) / n2;
    }
  });
  bool any = false;
  double out = 0.0;
  for (double v : vals) {
    if (std::isnan(v)) continue;
    out = any ? (lipschitz ? std::max(out, v) : std::min(out, v)) : v;
    any = true;
  }
  if (!any)
    throw std::runtime_error(std::string(who) +
                             ": every sampled pair was degenerate");
  return out;
}

}  // namespace

double estimate_lipschitz(const OperatorHandle& F, const PairSampler& sampler,
                          long pairs, int threads) {
  return estimate_extreme(F, sampler, pairs, threads, true);
}

double estimate_lipschitz_serial(const OperatorHandle& F,
                                 const PairSampler& sampler, long pairs) {
  return estimate_extreme(F, sampler, pairs, 1, true);
}

double estimate_comonotonicity(const OperatorHandle& F,
                               const PairSampler& sampler, long pairs,
                               int threads) {
  return estimate_extreme(F, sampler, pairs, threads, false);
}

double estimate_comonotonicity_serial(const OperatorHandle& F,
                                      const PairSampler& sampler, long pairs) {
  return estimate_extreme(F, sampler, pairs, 1, false);
}

bool check_span(const Trace& trace, const OperatorHandle& F) {
  if (F.dim > 16)
    throw std::invalid_argument(
        "check_span: dimension must be at most 16 for the least-squares check");
  if (trace.iterates.empty()) return true;
  const Vec& z0 = trace.iterates.front();

  // Trace points in the order their operator values become available:
  // z_0, z_{1/2}, z_1, z_{3/2}, ...
  std::vector<const Vec*> points;
  points.reserve(trace.iterates.size() + trace.half_iterates.size());
  for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
    points.push_back(&trace.iterates[i]);
    if (i < trace.half_iterates.size()) points.push_back(&trace.half_iterates[i]);
  }

  std::vector<Vec> basis;  // orthonormal, grown by modified Gram-Schmidt
  auto project_out = [&basis](Vec v) {
    for (const Vec& q : basis) v -= q.dot(v) * q;
    for (const Vec& q : basis) v -= q.dot(v) * q;  // re-orthogonalization pass
    return v;
  };
  for (const Vec* p : points) {
    // The span at a point includes that point's own operator value.
    Vec Fv = evaluate_operator(F, *p);
    if (static_cast<int>(basis.size()) < F.dim) {
      const double scale = Fv.norm();
      Vec r = project_out(std::move(Fv));
      const double rn = r.norm();
      if (rn > 1e-12 * (1.0 + scale)) basis.push_back(r / rn);
    }
    Vec d = *p - z0;
    const double dn = d.norm();
    Vec res = project_out(std::move(d));
    if (res.norm() > 1e-8 * (1.0 + dn)) return false;
  }
  return true;
}

const char* cert_status_name(CertStatus s) {
  switch (s) {
    case CertStatus::pass: return "pass";
    case CertStatus::fail: return "fail";
    case CertStatus::skipped: return "skipped";
  }
  return "?";
}

std::pair<StepSchedule, LocalSmoothness> schedule_of_run(const RunHandle& run) {
  switch (run.method) {
    case Method::feg: {
      const double L = run.L;
      return {feg_step_schedule(L, run.rho), [L](int) { return L; }};
    }
    case Method::s_feg: {
      const double L = run.L;
      return {feg_step_schedule(L, 0.0), [L](int) { return L; }};
    }
    case Method::feg_a: {
      auto tau =
          std::make_shared<const std::vector<double>>(run.trace.step_tau);
      auto eta =
          std::make_shared<const std::vector<double>>(run.trace.step_eta);
      const double tau_tail = tau->empty() ? run.tau_init : tau->back();
      const double eta_tail = eta->empty() ? run.eta_init : eta->back();
      if (!(tau_tail > 0.0) || !(eta_tail > 0.0))
        throw std::invalid_argument(
            "schedule_of_run: adaptive run carries no step sizes");
      StepSchedule s;
      // Past the last committed step the pair repeats, which keeps the
      // coefficient chain valid at the final iterate.
      s.alpha = [tau, tau_tail](int k) {
        return k < static_cast<int>(tau->size()) ? (*tau)[k] : tau_tail;
      };
      s.beta = [](int k) { return 1.0 / static_cast<double>(k + 1); };
      s.rho = [tau, eta, tau_tail, eta_tail](int k) {
        const double t = k < static_cast<int>(tau->size()) ? (*tau)[k] : tau_tail;
        const double e = k < static_cast<int>(eta->size()) ? (*eta)[k] : eta_tail;
        return (e - t) / 2.0;
      };
      LocalSmoothness L_seq = [tau, tau_tail](int k) {
        return 1.0 /
               (k < static_cast<int>(tau->size()) ? (*tau)[k] : tau_tail);
      };
      return {std::move(s), std::move(L_seq)};
    }
    default:
      throw std::invalid_argument(std::string("schedule_of_run: method '") +
                                  method_name(run.method) +
                                  "' does not follow the family schedule");
  }
}

CertificateReport certify_run(const RunHandle& run, int threads) {
  const Trace& tr = run.trace;
  if (tr.iterates.empty())
    throw std::invalid_argument("certify_run: trace holds no iterates");
  CertificateReport rep;
  const int K = static_cast<int>(tr.iterates.size()) - 1;
  const OperatorHandle& F = run.problem.op;
  const Vec& z0 = tr.iterates.front();
  auto note = [&rep](const std::string& s) {
    if (!rep.notes.empty()) rep.notes += "; ";
    rep.notes += s;
  };

  const bool noisy = run.noise && !run.noise->schedule.all_zero();

  bool want_potential = false;
  switch (run.method) {
    case Method::feg:
    case Method::feg_a:
      want_potential = true;
      break;
    case Method::s_feg:
      if (!noisy)
        want_potential = true;
      else
        note("potential: skipped (stochastic run; the guarantee is expectation-level)");
      break;
    default:
      note("potential: skipped (method does not follow the family schedule)");
      break;
  }

  std::function<double(int)> bound_at;
  double D = 0.0;
  bool have_D = false;
  if (run.problem.solution) {
    D = (z0 - *run.problem.solution).norm();
    have_D = true;
  }
  switch (run.method) {
    case Method::feg: {
      if (!have_D) {
        note("bound: skipped (problem declares no reference solution)");
        break;
      }
      const double L = run.L, rho = run.rho, DD = D;
      bound_at = [L, rho, DD](int k) { return bound_feg(L, rho, DD, k); };
      break;
    }
    case Method::feg_a: {
      if (!have_D) {
        note("bound: skipped (problem declares no reference solution)");
        break;
      }
      if (!run.problem.lipschitz || !run.problem.comonotone) {
        note("bound: skipped (adaptive guarantee needs declared smoothness and comonotonicity)");
        break;
      }
      const double L = *run.problem.lipschitz;
      const double rho = *run.problem.comonotone;
      const double delta = run.delta, DD = D;
      if (!(rho > -(1.0 - delta) / (2.0 * L))) {
        note("bound: skipped (outside the adaptive guarantee regime)");
        break;
      }
      bound_at = [L, rho, delta, DD](int k) {
        return bound_fega(L, rho, delta, DD, k);
      };
      break;
    }
    case Method::s_feg: {
      if (noisy) {
        note("bound: skipped (single stochastic trace; use the Monte Carlo report)");
        break;
      }
      if (!have_D || !run.problem.comonotone ||
          !(*run.problem.comonotone >= 0.0)) {
        note("bound: skipped (stochastic guarantee needs a monotone problem with a reference solution)");
        break;
      }
      const double L = run.L, DD = D;
      auto sig = std::make_shared<const VarianceSchedule>(
          run.noise ? run.noise->schedule : VarianceSchedule::zero(K));
      bound_at = [L, DD, sig](int k) { return bound_sfeg(L, DD, *sig, k); };
      break;
    }
    case Method::eag_c:
    case Method::eag_v: {
      if (!have_D || !run.problem.comonotone ||
          !(*run.problem.comonotone >= 0.0)) {
        note("bound: skipped (anchored-baseline guarantee needs a monotone problem with a reference solution)");
        break;
      }
      const double L = run.L, DD = D;
      if (run.method == Method::eag_c)
        bound_at = [L, DD](int k) { return bound_eag_c(L, DD, k); };
      else
        bound_at = [L, DD](int k) { return bound_eag_v(L, DD, k); };
      break;
    }
    default:
      note("bound: skipped (no closed-form guarantee for this baseline)");
      break;
  }

  // Fresh operator values at the trace points (one slot per point).
  std::vector<Vec> F_iter(static_cast<std::size_t>(K) + 1);
  for_slots(K + 1, threads, [&](long k) {
    F_iter[static_cast<std::size_t>(k)] =
        evaluate_operator(F, tr.iterates[static_cast<std::size_t>(k)]);
  });
  const long H = static_cast<long>(tr.half_iterates.size());
  std::vector<Vec> F_half(static_cast<std::size_t>(H));
  if (want_potential) {
    for_slots(H, threads, [&](long k) {
      F_half[static_cast<std::size_t>(k)] =
          evaluate_operator(F, tr.half_iterates[static_cast<std::size_t>(k)]);
    });
  }

  std::vector<double> V;
  StepSchedule sched;
  LocalSmoothness lseq;
  bool sched_ok = true;
  if (want_potential) {
    std::tie(sched, lseq) = schedule_of_run(run);
    if (K >= 1) sched_ok = check_schedule_admissible(sched, lseq, K);
    if (!sched_ok) note("potential: realized schedule failed admissibility");
    PotentialLedger led = build_potential_ledger(sched, lseq, K);
    V.resize(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) {
      Vec d0 = z0 - tr.iterates[static_cast<std::size_t>(k)];
      V[static_cast<std::size_t>(k)] =
          led.a[static_cast<std::size_t>(k)] *
              F_iter[static_cast<std::size_t>(k)].squaredNorm() -
          led.b[static_cast<std::size_t>(k)] *
              F_iter[static_cast<std::size_t>(k)].dot(d0);
    }
  }

  rep.steps.resize(static_cast<std::size_t>(K) + 1);
  bool pot_fail = want_potential && !sched_ok;
  bool bound_fail = false;
  long gated_link_misses = 0;
  for (int k = 0; k <= K; ++k) {
    StepCertificate& st = rep.steps[static_cast<std::size_t>(k)];
    st.k = k;
    st.grad_norm_sq = F_iter[static_cast<std::size_t>(k)].squaredNorm();
    if (bound_at && k >= 1) {
      const double b = bound_at(k);
      st.bound = b;
      st.bound_ok = st.grad_norm_sq <= b * (1.0 + cert_tol);
      if (!st.bound_ok) bound_fail = true;
      if (b > 0.0)
        rep.bound_ratio_max = std::max(rep.bound_ratio_max, st.grad_norm_sq / b);
      else if (st.grad_norm_sq > 0.0)
        rep.bound_ratio_max = std::numeric_limits<double>::infinity();
    }
    if (want_potential) {
      st.potential = V[static_cast<std::size_t>(k)];
      if (k >= 1) {
        // One-step conditions the ledger rests on: local Lipschitz level
        // L_{k-1} between z_k and z_{k-1/2}, local comonotonicity level
        // rho_{k-1} between z_k and z_{k-1}.
        bool lok = true;
        if (k - 1 < H) {
          const double Lk = lseq(k - 1);
          const double lhs =
              (F_iter[static_cast<std::size_t>(k)] -
               F_half[static_cast<std::size_t>(k - 1)])
                  .norm();
          const double rhs =
              Lk * (tr.iterates[static_cast<std::size_t>(k)] -
                    tr.half_iterates[static_cast<std::size_t>(k - 1)])
                       .norm();
          if (lhs > rhs + cert_tol * (1.0 + rhs)) lok = false;
        }
        {
          const double rho = sched.rho(k - 1);
          Vec dF = F_iter[static_cast<std::size_t>(k)] -
                   F_iter[static_cast<std::size_t>(k - 1)];
          const double lhs = dF.dot(tr.iterates[static_cast<std::size_t>(k)] -
                                    tr.iterates[static_cast<std::size_t>(k - 1)]);
          const double rhs = rho * dF.squaredNorm();
          if (lhs < rhs - cert_tol * (1.0 + std::abs(rhs))) lok = false;
        }
        st.local_ok = lok;

        const double Vp = V[static_cast<std::size_t>(k - 1)];
        const double V1 = V[1];
        st.potential_link_ok =
            V[static_cast<std::size_t>(k)] <= Vp + cert_tol * (1.0 + std::abs(Vp));
        st.potential_chain_ok =
            V[static_cast<std::size_t>(k)] <= V1 + cert_tol * (1.0 + std::abs(V1));
        if (k == 1 && !(V1 <= cert_tol)) st.potential_chain_ok = false;
        if (!st.potential_chain_ok) pot_fail = true;
        if (!st.potential_link_ok) {
          if (st.local_ok)
            pot_fail = true;
          else
            ++gated_link_misses;
        }
      }
    }
  }
  if (gated_link_misses > 0)
    note("potential: " + std::to_string(gated_link_misses) +
         " link miss(es) at steps whose one-step conditions do not hold (logged, not failures)");
  if (want_potential)
    rep.potential = pot_fail ? CertStatus::fail : CertStatus::pass;
  if (bound_at) rep.bound = bound_fail ? CertStatus::fail : CertStatus::pass;

  if (F.dim > 16)
    note("span: skipped (dimension above the least-squares limit)");
  else if (noisy)
    note("span: skipped (noisy queries leave the exact-operator span)");
  else
    rep.span = check_span(tr, F) ? CertStatus::pass : CertStatus::fail;

  return rep;
}

}  // namespace feg
