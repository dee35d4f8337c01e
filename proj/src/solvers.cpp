#include "feg/solvers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace feg {

namespace {

constexpr long max_shrink_total = 1000000;

bool same_point(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!(a[i] == b[i])) return false;
  return true;
}

void require_finite_point(const Vec& v, const char* what, int k) {
  if (!all_finite(v))
    throw std::runtime_error(std::string(what) +
                             " became non-finite at iteration k=" +
                             std::to_string(k));
}

double require_lipschitz(const ProblemSpec& p, const char* who) {
  if (!p.lipschitz)
    throw std::invalid_argument(std::string(who) + ": problem '" + p.label +
                                "' does not declare a smoothness constant");
  double L = *p.lipschitz;
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument(std::string(who) +
                                ": smoothness constant must be positive and finite");
  return L;
}

void require_start(const ProblemSpec& p, const Vec& z0, int K, const char* who) {
  if (K < 1)
    throw std::invalid_argument(std::string(who) +
                                ": iteration budget must be at least 1");
  if (static_cast<int>(z0.size()) != p.op.dim)
    throw std::invalid_argument(std::string(who) + ": starting point has dimension " +
                                std::to_string(z0.size()) + " but the operator expects " +
                                std::to_string(p.op.dim));
  if (!all_finite(z0))
    throw std::invalid_argument(std::string(who) + ": starting point must be finite");
}

void shrink_guard(long total) {
  if (total > max_shrink_total)
    throw std::runtime_error(
        "run_feg_a: step-size search exceeded 1e6 shrinkages; "
        "the operator violates the required conditions at achievable step sizes");
}

// True when a pair separation sits at the rounding floor of the arithmetic
// that produced the points. The anchored recursion drives the half- and
// full-iterates together (F z_k aligns with the anchor direction), and once
// the separation is dominated by rounding residue the local acceptance tests
// compare noise against noise. A coincident pair satisfies both conditions in
// exact arithmetic, so such pairs must pass rather than trigger shrinkage.
bool pair_below_rounding(double separation, double term_scale) {
  return separation <= 256.0 * std::numeric_limits<double>::epsilon() * term_scale;
}

RunHandle run_eg_like(const ProblemSpec& problem, const Vec& z0, int K,
                      double alpha, double beta, Method method, const char* who) {
  require_start(problem, z0, K, who);
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument(std::string(who) + ": alpha must be positive and finite");
  if (!(beta > 0.0) || !(beta <= 1.0))
    throw std::invalid_argument(std::string(who) + ": beta must lie in (0, 1]");
  RunHandle run;
  run.method = method;
  run.problem = problem;
  run.alpha = alpha;
  run.beta = beta;
  if (problem.lipschitz) run.L = *problem.lipschitz;
  run.trace.iterates.push_back(z0);
  detail::continue_run(run, K);
  return run;
}

}  // namespace

bool is_anchored(Method m) {
  switch (m) {
    case Method::feg:
    case Method::feg_a:
    case Method::s_feg:
    case Method::eag_c:
    case Method::eag_v:
      return true;
    case Method::eg:
    case Method::eg_plus:
      return false;
  }
  return false;
}

const char* method_name(Method m) {
  switch (m) {
    case Method::feg: return "feg";
    case Method::feg_a: return "feg-a";
    case Method::s_feg: return "s-feg";
    case Method::eg: return "eg";
    case Method::eg_plus: return "eg+";
    case Method::eag_c: return "eag-c";
    case Method::eag_v: return "eag-v";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "feg") return Method::feg;
  if (name == "feg-a") return Method::feg_a;
  if (name == "s-feg") return Method::s_feg;
  if (name == "eg") return Method::eg;
  if (name == "eg+") return Method::eg_plus;
  if (name == "eag-c") return Method::eag_c;
  if (name == "eag-v") return Method::eag_v;
  throw std::invalid_argument("unknown method '" + name +
                              "' (expected one of feg, feg-a, s-feg, eg, eg+, eag-c, eag-v)");
}

StepSchedule feg_step_schedule(double L, double rho) {
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument("feg_step_schedule: L must be positive and finite");
  if (!std::isfinite(rho))
    throw std::invalid_argument("feg_step_schedule: rho must be finite");
  const double alpha = 1.0 / L;
  return StepSchedule{
      [alpha](int) { return alpha; },
      [](int k) { return 1.0 / static_cast<double>(k + 1); },
      [rho](int) { return rho; },
  };
}

bool traces_equal(const Trace& a, const Trace& b) {
  auto points_eq = [](const std::vector<Vec>& x, const std::vector<Vec>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!same_point(x[i], y[i])) return false;
    return true;
  };
  auto doubles_eq = [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] == y[i])) return false;
    return true;
  };
  return points_eq(a.iterates, b.iterates) &&
         points_eq(a.half_iterates, b.half_iterates) &&
         doubles_eq(a.grad_norm_sq, b.grad_norm_sq) &&
         doubles_eq(a.step_tau, b.step_tau) &&
         doubles_eq(a.step_eta, b.step_eta) &&
         doubles_eq(a.alpha_cache, b.alpha_cache) &&
         a.oracle_calls == b.oracle_calls && a.stop_reason == b.stop_reason;
}

namespace detail {

Vec feg_half_formula(const Vec& z_k, const Vec& z_0, const Vec& F_k,
                     double alpha, double beta, double rho) {
  Vec d0 = z_0 - z_k;
  return vector_combine(
      {{1.0, &z_k}, {beta, &d0}, {-(1.0 - beta) * (alpha + 2.0 * rho), &F_k}});
}

Vec feg_next_formula(const Vec& z_k, const Vec& z_0, const Vec& F_half,
                     const Vec& F_k, double alpha, double beta, double rho) {
  Vec d0 = z_0 - z_k;
  return vector_combine({{1.0, &z_k},
                         {beta, &d0},
                         {-alpha, &F_half},
                         {-(1.0 - beta) * 2.0 * rho, &F_k}});
}

void extend_eagv_alphas(std::vector<double>& alphas, double L, int upto) {
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument("run_eag: L must be positive and finite");
  if (alphas.empty()) alphas.push_back(0.618 / L);
  while (static_cast<int>(alphas.size()) <= upto) {
    const int k = static_cast<int>(alphas.size()) - 1;
    const double aL = alphas[k] * L;
    const double s = aL * aL;
    if (s >= 1.0)
      throw std::runtime_error(
          "run_eag: the variant-V step recursion reached alpha^2 L^2 >= 1 at k=" +
          std::to_string(k));
    const double kk = static_cast<double>(k);
    const double ratio = ((kk + 2.0) * (kk + 2.0)) / ((kk + 1.0) * (kk + 3.0));
    alphas.push_back(alphas[k] / (1.0 - s) * (1.0 - ratio * s));
  }
}

void continue_run(RunHandle& run, int target_K) {
  Trace& tr = run.trace;
  if (tr.iterates.empty())
    throw std::invalid_argument("resume: trace holds no iterates");
  const OperatorHandle& F = run.problem.op;
  const Vec z0 = tr.iterates.front();
  const bool anchored = is_anchored(run.method);
  if (run.method == Method::eag_v)
    extend_eagv_alphas(tr.alpha_cache, run.L, target_K - 1);

  int k = static_cast<int>(tr.iterates.size()) - 1;
  while (k < target_K) {
    const Vec zk = tr.iterates.back();
    Vec Fk = evaluate_operator(F, zk);
    if (static_cast<int>(tr.grad_norm_sq.size()) == k)
      tr.grad_norm_sq.push_back(Fk.squaredNorm());
    if (std::sqrt(tr.grad_norm_sq[k]) < stationary_norm &&
        (!anchored || same_point(zk, z0))) {
      // The evaluation above only diagnosed the stop; it is not charged.
      tr.stop_reason = StopReason::stationary;
      return;
    }

    Vec zh, zn;
    double tau = 0.0, eta = 0.0;
    switch (run.method) {
      case Method::feg: {
        const double beta = 1.0 / static_cast<double>(k + 1);
        zh = feg_half_formula(zk, z0, Fk, run.alpha, beta, run.rho);
        require_finite_point(zh, "half-iterate", k);
        Vec Fh = evaluate_operator(F, zh);
        zn = feg_next_formula(zk, z0, Fh, Fk, run.alpha, beta, run.rho);
        tau = run.alpha;
        eta = run.alpha + 2.0 * run.rho;
        break;
      }
      case Method::eag_c:
      case Method::eag_v: {
        const double beta = 1.0 / static_cast<double>(k + 2);
        const double alpha =
            (run.method == Method::eag_c) ? run.alpha : tr.alpha_cache[k];
        Vec d0 = z0 - zk;
        zh = vector_combine({{1.0, &zk}, {beta, &d0}, {-alpha, &Fk}});
        require_finite_point(zh, "half-iterate", k);
        Vec Fh = evaluate_operator(F, zh);
        zn = vector_combine({{1.0, &zk}, {beta, &d0}, {-alpha, &Fh}});
        tau = alpha;
        eta = alpha;
        break;
      }
      case Method::eg:
      case Method::eg_plus: {
        const double half_step = run.alpha / run.beta;
        zh = vector_combine({{1.0, &zk}, {-half_step, &Fk}});
        require_finite_point(zh, "half-iterate", k);
        Vec Fh = evaluate_operator(F, zh);
        zn = vector_combine({{1.0, &zk}, {-run.alpha, &Fh}});
        tau = run.alpha;
        eta = half_step;
        break;
      }
      default:
        throw std::logic_error("continue_run: method not handled by this engine");
    }
    require_finite_point(zn, "iterate", k);

    tr.oracle_calls += 2;
    tr.half_iterates.push_back(std::move(zh));
    tr.iterates.push_back(std::move(zn));
    tr.step_tau.push_back(tau);
    tr.step_eta.push_back(eta);
    ++k;
  }

  // Final gradient-norm measurement; diagnostic, not charged.
  Vec Ff = evaluate_operator(F, tr.iterates.back());
  if (static_cast<int>(tr.grad_norm_sq.size()) == k)
    tr.grad_norm_sq.push_back(Ff.squaredNorm());
  tr.stop_reason = StopReason::max_iters;
}

void continue_feg_a(RunHandle& run, int target_K) {
  Trace& tr = run.trace;
  const OperatorHandle& F = run.problem.op;
  if (tr.iterates.size() < 2)
    throw std::logic_error("continue_feg_a: the initial step must be taken first");
  if (!run.has_cached_grad || !(run.tau_last > 0.0) || !(run.eta_last > 0.0) ||
      !(run.delta > 0.0) || !(run.delta < 1.0))
    throw std::invalid_argument("resume: feg-a continuation state is missing");
  const Vec z0 = tr.iterates.front();
  double tau = run.tau_last;
  double eta = run.eta_last;

  int k = static_cast<int>(tr.iterates.size()) - 1;
  while (k < target_K) {
    const Vec zk = tr.iterates.back();
    const Vec Fk = run.cached_grad;
    if (std::sqrt(tr.grad_norm_sq[k]) < stationary_norm && same_point(zk, z0)) {
      tr.stop_reason = StopReason::stationary;
      return;
    }
    const double beta = 1.0 / static_cast<double>(k + 1);
    Vec d0 = z0 - zk;
    long fails = 0;
    for (;;) {
      // Snapshot the pair: both acceptance tests below refer to the sizes
      // that formed these candidates, even if one of them shrinks.
      const double tau_used = tau;
      const double eta_used = eta;
      Vec zh = vector_combine(
          {{1.0, &zk}, {beta, &d0}, {-(1.0 - beta) * eta_used, &Fk}});
      require_finite_point(zh, "half-iterate", k);
      Vec Fh = evaluate_operator(F, zh);
      Vec zn = vector_combine({{1.0, &zk},
                               {beta, &d0},
                               {-tau_used, &Fh},
                               {-(1.0 - beta) * (eta_used - tau_used), &Fk}});
      require_finite_point(zn, "iterate", k);
      Vec Fn = evaluate_operator(F, zn);
      tr.oracle_calls += 2;

      // Magnitude of the terms combined into the candidates; separations at
      // the rounding floor of this scale carry no curvature information.
      const double term_scale = zk.norm() + beta * d0.norm() +
                                eta_used * Fk.norm() + tau_used * Fh.norm();
      bool ok = true;
      // Local Lipschitz condition at level 1/tau; ties and pairs at the
      // rounding floor pass.
      if (!pair_below_rounding((zn - zh).norm(), term_scale) &&
          tau_used * (Fn - Fh).norm() > (zn - zh).norm()) {
        tau = tau_used * (1.0 - run.delta);
        ++fails;
        ++run.shrink_total;
        ok = false;
      }
      // Local comonotonicity condition at level (eta - tau)/2; ties and
      // pairs at the rounding floor pass.
      Vec dF = Fn - Fk;
      if (!pair_below_rounding((zn - zk).norm(), term_scale) &&
          dF.dot(zn - zk) < 0.5 * (eta_used - tau_used) * dF.squaredNorm()) {
        eta = eta_used * (1.0 - run.delta);
        ++fails;
        ++run.shrink_total;
        ok = false;
      }
      if (!ok) {
        shrink_guard(run.shrink_total);
        continue;
      }
      tr.half_iterates.push_back(std::move(zh));
      tr.iterates.push_back(std::move(zn));
      tr.grad_norm_sq.push_back(Fn.squaredNorm());
      tr.step_tau.push_back(tau_used);
      tr.step_eta.push_back(eta_used);
      run.shrinks_per_iter.push_back(fails);
      run.cached_grad = std::move(Fn);
      break;
    }
    run.tau_last = tau;
    run.eta_last = eta;
    ++k;
  }
  tr.stop_reason = StopReason::max_iters;
}

}  // namespace detail

std::pair<Vec, Vec> class_feg_step(const Vec& z_k, const Vec& z_0,
                                   const OperatorHandle& F, int k,
                                   const StepSchedule& sched) {
  if (k < 0) throw std::invalid_argument("class_feg_step: k must be nonnegative");
  if (!sched.alpha || !sched.beta || !sched.rho)
    throw std::invalid_argument("class_feg_step: schedule maps must be set");
  const double alpha = sched.alpha(k);
  const double beta = sched.beta(k);
  const double rho = sched.rho(k);
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(rho))
    throw std::invalid_argument("class_feg_step: schedule produced a non-finite value at k=" +
                                std::to_string(k));
  Vec Fk = evaluate_operator(F, z_k);
  Vec zh = detail::feg_half_formula(z_k, z_0, Fk, alpha, beta, rho);
  require_finite_point(zh, "half-iterate", k);
  Vec Fh = evaluate_operator(F, zh);
  Vec zn = detail::feg_next_formula(z_k, z_0, Fh, Fk, alpha, beta, rho);
  require_finite_point(zn, "iterate", k);
  return {std::move(zh), std::move(zn)};
}

RunHandle run_feg(const ProblemSpec& problem, const Vec& z0, int K) {
  require_start(problem, z0, K, "run_feg");
  const double L = require_lipschitz(problem, "run_feg");
  if (!problem.comonotone)
    throw std::invalid_argument("run_feg: problem '" + problem.label +
                                "' does not declare a comonotonicity level");
  const double rho = *problem.comonotone;
  if (!(rho > -0.5 / L))
    throw std::invalid_argument("run_feg: requires rho > -1/(2L); got rho=" +
                                std::to_string(rho) + " with L=" + std::to_string(L));
  RunHandle run;
  run.method = Method::feg;
  run.problem = problem;
  run.L = L;
  run.alpha = 1.0 / L;
  run.rho = rho;
  run.trace.iterates.push_back(z0);
  detail::continue_run(run, K);
  return run;
}

RunHandle run_eg_plus(const ProblemSpec& problem, const Vec& z0, int K,
                      double alpha, double beta) {
  return run_eg_like(problem, z0, K, alpha, beta, Method::eg_plus, "run_eg_plus");
}

RunHandle run_eg(const ProblemSpec& problem, const Vec& z0, int K) {
  const double L = require_lipschitz(problem, "run_eg");
  return run_eg_like(problem, z0, K, 1.0 / L, 1.0, Method::eg, "run_eg");
}

RunHandle run_eag(const ProblemSpec& problem, const Vec& z0, int K,
                  EagVariant variant) {
  require_start(problem, z0, K, "run_eag");
  const double L = require_lipschitz(problem, "run_eag");
  RunHandle run;
  run.method = (variant == EagVariant::C) ? Method::eag_c : Method::eag_v;
  run.problem = problem;
  run.L = L;
  run.alpha = (variant == EagVariant::C) ? 1.0 / (8.0 * L) : 0.0;
  run.trace.iterates.push_back(z0);
  detail::continue_run(run, K);
  return run;
}

RunHandle run_feg_a(const OperatorHandle& F, const Vec& z0, double tau_init,
                    double eta_init, double delta, int K) {
  ProblemSpec problem;
  problem.label = "adaptive";
  problem.op = F;
  return run_feg_a(problem, z0, tau_init, eta_init, delta, K);
}

RunHandle run_feg_a(const ProblemSpec& problem, const Vec& z0, double tau_init,
                    double eta_init, double delta, int K) {
  require_start(problem, z0, K, "run_feg_a");
  if (!(tau_init > 0.0) || !std::isfinite(tau_init))
    throw std::invalid_argument("run_feg_a: tau_init must be positive and finite");
  if (!(eta_init > 0.0) || !std::isfinite(eta_init))
    throw std::invalid_argument("run_feg_a: eta_init must be positive and finite");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("run_feg_a: delta must lie strictly in (0, 1)");

  RunHandle run;
  run.method = Method::feg_a;
  run.problem = problem;
  run.delta = delta;
  run.tau_init = tau_init;
  run.eta_init = eta_init;
  Trace& tr = run.trace;
  tr.iterates.push_back(z0);

  Vec F0 = evaluate_operator(problem.op, z0);
  tr.grad_norm_sq.push_back(F0.squaredNorm());
  if (std::sqrt(tr.grad_norm_sq[0]) < stationary_norm) {
    tr.stop_reason = StopReason::stationary;
    return run;
  }
  tr.oracle_calls += 1;  // F z_0 feeds the first update

  // Initial search: the smallest number of shrinkages such that
  // zhat = z_0 - tau F z_0 satisfies tau |F zhat - F z_0| <= |zhat - z_0|.
  double tau = tau_init;
  long i0 = 0;
  Vec zhat, Fhat;
  for (;;) {
    zhat = vector_combine({{1.0, &z0}, {-tau, &F0}});
    require_finite_point(zhat, "half-iterate", 0);
    Fhat = evaluate_operator(problem.op, zhat);
    tr.oracle_calls += 1;
    if (pair_below_rounding((zhat - z0).norm(), z0.norm() + tau * F0.norm()) ||
        tau * (Fhat - F0).norm() <= (zhat - z0).norm())
      break;
    tau *= (1.0 - delta);
    ++i0;
    ++run.shrink_total;
    shrink_guard(run.shrink_total);
  }
  run.tau_last = tau;
  run.eta_last = eta_init;
  run.shrinks_per_iter.push_back(i0);
  tr.step_tau.push_back(tau);
  tr.step_eta.push_back(eta_init);
  tr.half_iterates.push_back(z0);  // the family step with beta_0 = 1 stalls at z_0
  tr.grad_norm_sq.push_back(Fhat.squaredNorm());
  tr.iterates.push_back(std::move(zhat));
  run.cached_grad = std::move(Fhat);
  run.has_cached_grad = true;
  if (K == 1) {
    tr.stop_reason = StopReason::max_iters;
    return run;
  }
  detail::continue_feg_a(run, K);
  return run;
}

void resume(RunHandle& run, int extra) {
  if (extra < 0)
    throw std::invalid_argument("resume: extra iterations must be nonnegative");
  if (run.trace.stop_reason == StopReason::stationary) return;
  if (run.trace.stop_reason == StopReason::error)
    throw std::invalid_argument("resume: cannot extend a run that stopped with an error");
  if (run.trace.iterates.empty())
    throw std::invalid_argument("resume: trace holds no iterates");
  if (extra == 0) return;
  const int target = static_cast<int>(run.trace.iterates.size()) - 1 + extra;
  switch (run.method) {
    case Method::feg_a:
      detail::continue_feg_a(run, target);
      break;
    case Method::s_feg:
      detail::continue_sfeg(run, target);
      break;
    default:
      detail::continue_run(run, target);
      break;
  }
}

}  // namespace feg
