#include "feg/stochastic.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace feg {

namespace {

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

// Runs fill(t) for every trial; each call writes only its own slots, so the
// schedule cannot change any value. threads == 1 forces the plain loop.
template <class Fill>
void fill_trials(long trials, int threads, Fill&& fill) {
#ifdef _OPENMP
  if (threads != 1) {
    const int nt = threads > 0 ? threads : omp_get_max_threads();
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic) num_threads(nt)
    for (long t = 0; t < trials; ++t) {
      try {
        fill(t);
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
  for (long t = 0; t < trials; ++t) fill(t);
}

// Mean and standard error accumulated in trial order.
MeanEstimate reduce_mean(const std::vector<double>& vals) {
  MeanEstimate out;
  out.trials = static_cast<long>(vals.size());
  if (vals.empty()) return out;
  double s = 0.0;
  for (double v : vals) s += v;
  out.mean = s / static_cast<double>(vals.size());
  if (vals.size() > 1) {
    double q = 0.0;
    for (double v : vals) {
      const double d = v - out.mean;
      q += d * d;
    }
    out.sem = std::sqrt(q / (static_cast<double>(vals.size()) *
                             static_cast<double>(vals.size() - 1)));
  }
  return out;
}

double require_lipschitz(const ProblemSpec& p, const char* who) {
  if (!p.lipschitz)
    throw std::invalid_argument(std::string(who) + ": problem '" + p.label +
                                "' does not declare a smoothness constant");
  const double L = *p.lipschitz;
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument(std::string(who) +
                                ": smoothness constant must be positive and finite");
  return L;
}

McSeries mc_series_impl(const ProblemSpec& problem, const NoiseModel& noise,
                        const Vec& z0, int K, long trials, int threads) {
  if (trials < 1)
    throw std::invalid_argument("mc_grad_series: trials must be at least 1");
  if (K < 1) throw std::invalid_argument("mc_grad_series: K must be at least 1");
  const std::size_t cols = static_cast<std::size_t>(K) + 1;
  std::vector<double> buf(static_cast<std::size_t>(trials) * cols);
  fill_trials(trials, threads, [&](long t) {
    RunHandle run =
        run_sfeg(problem, noise, z0, K, static_cast<std::uint64_t>(t), false);
    const auto& g = run.trace.grad_norm_sq;
    if (g.size() != cols)
      throw std::runtime_error(
          "mc_grad_series: a trial stopped before the horizon; the series is undefined");
    for (std::size_t k = 0; k < cols; ++k)
      buf[static_cast<std::size_t>(t) * cols + k] = g[k];
  });
  McSeries out;
  out.trials = trials;
  out.mean.resize(cols);
  out.sem.resize(cols);
  for (std::size_t k = 0; k < cols; ++k) {
    double s = 0.0;
    for (long t = 0; t < trials; ++t)
      s += buf[static_cast<std::size_t>(t) * cols + k];
    const double m = s / static_cast<double>(trials);
    double q = 0.0;
    for (long t = 0; t < trials; ++t) {
      const double d = buf[static_cast<std::size_t>(t) * cols + k] - m;
      q += d * d;
    }
    out.mean[k] = m;
    out.sem[k] = trials > 1
                     ? std::sqrt(q / (static_cast<double>(trials) *
                                      static_cast<double>(trials - 1)))
                     : 0.0;
  }
  return out;
}

}  // namespace

namespace detail {

void continue_sfeg(RunHandle& run, int target_K) {
  Trace& tr = run.trace;
  if (tr.iterates.empty())
    throw std::invalid_argument("resume: trace holds no iterates");
  if (!run.noise)
    throw std::invalid_argument("resume: s-feg continuation requires the noise model");
  const NoiseModel& noise = *run.noise;
  const OperatorHandle& F = run.problem.op;
  const Vec z0 = tr.iterates.front();
  const double alpha = run.alpha;
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("resume: s-feg continuation requires the step size");

  int k = static_cast<int>(tr.iterates.size()) - 1;
  while (k < target_K) {
    const Vec zk = tr.iterates.back();
    {
      Vec Fk = evaluate_operator(F, zk);  // noise-free diagnostic, not charged
      if (static_cast<int>(tr.grad_norm_sq.size()) == k)
        tr.grad_norm_sq.push_back(Fk.squaredNorm());
    }
    if (std::sqrt(tr.grad_norm_sq[k]) < stationary_norm && same_point(zk, z0)) {
      tr.stop_reason = StopReason::stationary;
      return;
    }

    Vec zh, zn;
    if (k == 0) {
      // The half-iterate coincides with the anchor; one query serves both
      // sub-steps.
      zh = zk;
      Vec xi;
      Vec G = noisy_eval(F, noise, zh, 0, run.trial,
                         run.record_noise ? &xi : nullptr);
      tr.oracle_calls += 1;
      if (run.record_noise) run.noise_record.emplace_back(0, std::move(xi));
      Vec d0 = z0 - zk;
      zn = vector_combine({{1.0, &zk}, {1.0, &d0}, {-alpha, &G}});
    } else {
      const double beta = 1.0 / static_cast<double>(k + 1);
      Vec d0 = z0 - zk;
      Vec xi_k, xi_h;
      Vec Gk = noisy_eval(F, noise, zk, 2 * k, run.trial,
                          run.record_noise ? &xi_k : nullptr);
      tr.oracle_calls += 1;
      if (run.record_noise) run.noise_record.emplace_back(2 * k, std::move(xi_k));
      zh = vector_combine({{1.0, &zk}, {beta, &d0}, {-(1.0 - beta) * alpha, &Gk}});
      require_finite_point(zh, "half-iterate", k);
      Vec Gh = noisy_eval(F, noise, zh, 2 * k + 1, run.trial,
                          run.record_noise ? &xi_h : nullptr);
      tr.oracle_calls += 1;
      if (run.record_noise)
        run.noise_record.emplace_back(2 * k + 1, std::move(xi_h));
      zn = vector_combine({{1.0, &zk}, {beta, &d0}, {-alpha, &Gh}});
    }
    require_finite_point(zn, "iterate", k);
    tr.half_iterates.push_back(std::move(zh));
    tr.iterates.push_back(std::move(zn));
    tr.step_tau.push_back(alpha);
    tr.step_eta.push_back(alpha);
    ++k;
  }

  Vec Ff = evaluate_operator(F, tr.iterates.back());
  if (static_cast<int>(tr.grad_norm_sq.size()) == k)
    tr.grad_norm_sq.push_back(Ff.squaredNorm());
  tr.stop_reason = StopReason::max_iters;
}

}  // namespace detail

RunHandle run_sfeg(const ProblemSpec& problem, const NoiseModel& noise,
                   const Vec& z0, int K, std::uint64_t trial,
                   bool record_noise) {
  if (K < 1)
    throw std::invalid_argument("run_sfeg: iteration budget must be at least 1");
  if (static_cast<int>(z0.size()) != problem.op.dim)
    throw std::invalid_argument("run_sfeg: starting point has dimension " +
                                std::to_string(z0.size()) +
                                " but the operator expects " +
                                std::to_string(problem.op.dim));
  if (!all_finite(z0))
    throw std::invalid_argument("run_sfeg: starting point must be finite");
  const double L = require_lipschitz(problem, "run_sfeg");

  RunHandle run;
  run.method = Method::s_feg;
  run.problem = problem;
  run.L = L;
  run.alpha = 1.0 / L;
  run.noise = noise;
  run.trial = trial;
  run.record_noise = record_noise;
  run.trace.iterates.push_back(z0);
  detail::continue_sfeg(run, K);
  return run;
}

McSeries mc_grad_series(const ProblemSpec& problem, const NoiseModel& noise,
                        const Vec& z0, int K, long trials, int threads) {
  return mc_series_impl(problem, noise, z0, K, trials, threads);
}

McSeries mc_grad_series_serial(const ProblemSpec& problem,
                               const NoiseModel& noise, const Vec& z0, int K,
                               long trials) {
  return mc_series_impl(problem, noise, z0, K, trials, 1);
}

namespace {

MeanEstimate cross_term_impl(const ProblemSpec& problem, const NoiseModel& noise,
                             const Vec& z0, int K, int point_twice,
                             int noise_twice, long trials, int threads) {
  if (trials < 1)
    throw std::invalid_argument("estimate_noise_cross_term: trials must be at least 1");
  if (point_twice < 0 || noise_twice < 0)
    throw std::invalid_argument("estimate_noise_cross_term: indices must be nonnegative");
  const int m = point_twice / 2;
  if (point_twice % 2 == 0 ? (m > K) : (m >= K))
    throw std::invalid_argument(
        "estimate_noise_cross_term: point index lies beyond the horizon");
  std::vector<double> vals(static_cast<std::size_t>(trials));
  fill_trials(trials, threads, [&](long t) {
    RunHandle run =
        run_sfeg(problem, noise, z0, K, static_cast<std::uint64_t>(t), true);
    const Vec* xi = nullptr;
    for (const auto& pr : run.noise_record)
      if (pr.first == noise_twice) {
        xi = &pr.second;
        break;
      }
    if (!xi)
      throw std::invalid_argument(
          "estimate_noise_cross_term: the run makes no query at twice-index " +
          std::to_string(noise_twice));
    const Vec& p = (point_twice % 2 == 0) ? run.trace.iterates[m]
                                          : run.trace.half_iterates[m];
    Vec Fp = evaluate_operator(problem.op, p);
    vals[static_cast<std::size_t>(t)] = Fp.dot(*xi);
  });
  return reduce_mean(vals);
}

}  // namespace

MeanEstimate estimate_noise_cross_term(const ProblemSpec& problem,
                                       const NoiseModel& noise, const Vec& z0,
                                       int K, int point_twice, int noise_twice,
                                       long trials, int threads) {
  return cross_term_impl(problem, noise, z0, K, point_twice, noise_twice,
                         trials, threads);
}

MeanEstimate estimate_noise_cross_term_serial(const ProblemSpec& problem,
                                              const NoiseModel& noise,
                                              const Vec& z0, int K,
                                              int point_twice, int noise_twice,
                                              long trials) {
  return cross_term_impl(problem, noise, z0, K, point_twice, noise_twice,
                         trials, 1);
}

MeanEstimate estimate_potential_gap(const ProblemSpec& problem,
                                    const NoiseModel& noise, const Vec& z0,
                                    int k, long trials, int threads) {
  if (k < 0)
    throw std::invalid_argument("estimate_potential_gap: k must be nonnegative");
  if (trials < 1)
    throw std::invalid_argument("estimate_potential_gap: trials must be at least 1");
  const double L = require_lipschitz(problem, "estimate_potential_gap");
  const int K = k + 1;
  auto potential_at = [&](const RunHandle& run, int j) {
    const Vec& zj = run.trace.iterates[static_cast<std::size_t>(j)];
    Vec Fj = evaluate_operator(problem.op, zj);
    const double a = static_cast<double>(j) * static_cast<double>(j) / (2.0 * L);
    const double b = static_cast<double>(j);
    Vec d0 = run.trace.iterates.front() - zj;
    return a * Fj.squaredNorm() - b * Fj.dot(d0);
  };
  std::vector<double> vals(static_cast<std::size_t>(trials));
  fill_trials(trials, threads, [&](long t) {
    RunHandle run =
        run_sfeg(problem, noise, z0, K, static_cast<std::uint64_t>(t), false);
    if (static_cast<int>(run.trace.iterates.size()) != K + 1)
      throw std::runtime_error(
          "estimate_potential_gap: a trial stopped before the horizon");
    vals[static_cast<std::size_t>(t)] = potential_at(run, k) - potential_at(run, k + 1);
  });
  return reduce_mean(vals);
}

double expected_potential_gap_floor(const StepSchedule& sched, double L,
                                    const VarianceSchedule& sigmas, int k) {
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument(
        "expected_potential_gap_floor: L must be positive and finite");
  if (k < 0)
    throw std::invalid_argument(
        "expected_potential_gap_floor: k must be nonnegative");
  if (!sched.alpha || !sched.beta)
    throw std::invalid_argument(
        "expected_potential_gap_floor: schedule maps must be set");
  if (k == 0) {
    const double a0 = sched.alpha(0);
    return -(L * L * a0 * a0 * a0 / 2.0 + L * a0 * a0) * sigmas.at_twice(0);
  }
  const double a = sched.alpha(k);
  const double b = sched.beta(k);
  const double bk = static_cast<double>(k);
  const double lead = bk * a * (1.0 + 2.0 * L * a) / (2.0 * b);
  return -lead * ((1.0 - b) * sigmas.at_twice(2 * k) +
                  sigmas.at_twice(2 * k + 1) / (1.0 - b));
}

}  // namespace feg
