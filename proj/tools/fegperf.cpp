// Benchmark of the OpenMP kernels against their serial reference
// implementations. Every kernel fills per-slot buffers and reduces in a
// fixed order, so the parallel results must match the serial ones exactly;
// this tool times both and verifies that equality on realistic workloads.
#include "feg/analysis.hpp"
#include "feg/problems.hpp"
#include "feg/solvers.hpp"
#include "feg/stochastic.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Row {
  std::string name;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool equal = false;
};

bool same_doubles(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

int main() {
  using namespace feg;
  std::vector<Row> rows;

  {
    Row r;
    r.name = "mc_grad_series (bilinear, K=30, 2000 trials)";
    ProblemSpec p = make_bilinear(1.0);
    NoiseModel noise;
    noise.family = NoiseFamily::gaussian_iid;
    noise.schedule = schedule_for_epsilon(1.0, 30);
    noise.seed = 7;
    Vec z0(2);
    z0 << 1.0, 0.0;
    auto t0 = Clock::now();
    const McSeries s = mc_grad_series_serial(p, noise, z0, 30, 2000);
    r.serial_ms = ms_since(t0);
    t0 = Clock::now();
    const McSeries q = mc_grad_series(p, noise, z0, 30, 2000);
    r.parallel_ms = ms_since(t0);
    r.equal = same_doubles(s.mean, q.mean) && same_doubles(s.sem, q.sem);
    rows.push_back(r);
  }

  {
    ProblemSpec p = random_negative_comonotone(5, 6, -0.1);
    PairSampler sampler;
    sampler.center = Vec::Zero(6);
    sampler.radius = 2.0;
    sampler.seed = 11;

    Row r;
    r.name = "estimate_lipschitz (random-nc d=6, 1e5 pairs)";
    auto t0 = Clock::now();
    const double ls = estimate_lipschitz_serial(p.op, sampler, 100000);
    r.serial_ms = ms_since(t0);
    t0 = Clock::now();
    const double lp = estimate_lipschitz(p.op, sampler, 100000);
    r.parallel_ms = ms_since(t0);
    r.equal = ls == lp;
    rows.push_back(r);

    Row c;
    c.name = "estimate_comonotonicity (random-nc d=6, 1e5 pairs)";
    t0 = Clock::now();
    const double cs = estimate_comonotonicity_serial(p.op, sampler, 100000);
    c.serial_ms = ms_since(t0);
    t0 = Clock::now();
    const double cp = estimate_comonotonicity(p.op, sampler, 100000);
    c.parallel_ms = ms_since(t0);
    c.equal = cs == cp;
    rows.push_back(c);
  }

  {
    Row r;
    r.name = "potential_series (feg bilinear, K=1e4)";
    ProblemSpec p = make_bilinear(1.0);
    Vec z0(2);
    z0 << 1.0, 0.0;
    const RunHandle run = run_feg(p, z0, 10000);
    auto [sched, lseq] = schedule_of_run(run);
    const PotentialLedger led = build_potential_ledger(sched, lseq, 10000);
    auto t0 = Clock::now();
    const std::vector<double> vs = potential_series_serial(run.trace, led, p);
    r.serial_ms = ms_since(t0);
    t0 = Clock::now();
    const std::vector<double> vp = potential_series(run.trace, led, p);
    r.parallel_ms = ms_since(t0);
    r.equal = same_doubles(vs, vp);
    rows.push_back(r);
  }

  {
    Row r;
    r.name = "estimate_noise_cross_term (bilinear, 2000 trials)";
    ProblemSpec p = make_bilinear(1.0);
    NoiseModel noise;
    noise.family = NoiseFamily::gaussian_iid;
    noise.schedule = VarianceSchedule::constant(0.1, 8);
    noise.seed = 3;
    Vec z0(2);
    z0 << 1.0, 0.0;
    auto t0 = Clock::now();
    const MeanEstimate es =
        estimate_noise_cross_term_serial(p, noise, z0, 8, 2, 0, 2000);
    r.serial_ms = ms_since(t0);
    t0 = Clock::now();
    const MeanEstimate ep = estimate_noise_cross_term(p, noise, z0, 8, 2, 0, 2000);
    r.parallel_ms = ms_since(t0);
    r.equal = es.mean == ep.mean && es.sem == ep.sem;
    rows.push_back(r);
  }

  std::printf("%-52s %12s %12s %9s %7s\n", "kernel", "serial(ms)",
              "parallel(ms)", "speedup", "equal");
  bool all_equal = true;
  for (const Row& r : rows) {
    const double speedup =
        r.parallel_ms > 0.0 ? r.serial_ms / r.parallel_ms : 0.0;
    std::printf("%-52s %12.2f %12.2f %8.2fx %7s\n", r.name.c_str(), r.serial_ms,
                r.parallel_ms, speedup, r.equal ? "yes" : "NO");
    all_equal = all_equal && r.equal;
  }
  if (!all_equal) {
    std::printf("FAIL: a parallel kernel diverged from its serial reference\n");
    return 1;
  }
  return 0;
}
