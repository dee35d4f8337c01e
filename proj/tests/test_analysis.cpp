// Certificates: potential ledger and admissibility, closed-form rate bounds,
// sampling estimators for the problem constants, span checking, and the
// combined run certifier.

#include "doctest.h"

#include "feg/analysis.hpp"
#include "feg/core.hpp"
#include "feg/problems.hpp"
#include "feg/solvers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

using feg::CertStatus;
using feg::Vec;

namespace {

Vec v2(double a, double b) {
  Vec z(2);
  z << a, b;
  return z;
}

feg::LocalSmoothness const_L(double L) {
  return [L](int) { return L; };
}

}  // namespace

TEST_CASE("potential coefficients: unit-anchor closed form and base cases") {
  const feg::StepSchedule s = feg::feg_step_schedule(1.0, 0.0);
  const auto [a3, b3] = feg::potential_coefficients(s, const_L(1.0), 3);
  CHECK(a3 == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(b3 == doctest::Approx(3.0).epsilon(1e-12));

  const auto [a0, b0] = feg::potential_coefficients(s, const_L(1.0), 0);
  CHECK(a0 == 0.0);  // alpha_0 = 1/L makes L^2 alpha_0^2 - 1 vanish
  CHECK(b0 == 0.0);
  const feg::StepSchedule s2 = feg::feg_step_schedule(2.0, 0.0);
  CHECK(feg::potential_coefficients(s2, const_L(2.0), 0).first == 0.0);

  const auto [a1, b1] = feg::potential_coefficients(s, const_L(1.0), 1);
  CHECK(a1 == 0.5);
  CHECK(b1 == 1.0);

  // Half-size first step: a_0 = alpha (L^2 alpha^2 - 1)/2 exactly.
  feg::StepSchedule half = s;
  half.alpha = [](int) { return 0.5; };
  CHECK(feg::potential_coefficients(half, const_L(1.0), 0).first == -0.1875);

  CHECK_THROWS_AS(feg::potential_coefficients(s, const_L(1.0), -1),
                  std::invalid_argument);
  CHECK_THROWS_AS(feg::potential_coefficients(feg::StepSchedule{}, const_L(1.0), 1),
                  std::invalid_argument);
}

TEST_CASE("potential coefficients: recursion tracks the closed form to k = 1e4") {
  const double L = 2.0, rho = -0.2;
  const feg::StepSchedule s = feg::feg_step_schedule(L, rho);
  const feg::PotentialLedger led = feg::build_potential_ledger(s, const_L(L), 10000);
  for (const int k : {1, 2, 7, 100, 999, 5000, 10000}) {
    const double kk = k;
    const double a_closed = 0.5 * kk * kk * (1.0 / L + 2.0 * rho) - kk * rho;
    CHECK(led.a[k] == doctest::Approx(a_closed).epsilon(1e-9));
    CHECK(led.b[k] == doctest::Approx(kk).epsilon(1e-9));
  }
}

TEST_CASE("ledger entries equal the per-index coefficients bitwise") {
  const feg::StepSchedule s = feg::feg_step_schedule(1.7, -0.1);
  const feg::PotentialLedger led = feg::build_potential_ledger(s, const_L(1.7), 200);
  REQUIRE(led.a.size() == 201);
  for (const int k : {0, 1, 2, 3, 50, 130, 200}) {
    const auto [a, b] = feg::potential_coefficients(s, const_L(1.7), k);
    CHECK(led.a[k] == a);
    CHECK(led.b[k] == b);
  }
  CHECK_THROWS_AS(feg::build_potential_ledger(s, const_L(1.7), -1),
                  std::invalid_argument);
}

TEST_CASE("adaptive runs satisfy a_k = (k/2)((k-1) eta_k + tau_k)") {
  const feg::ProblemSpec p = feg::make_bilinear(1.0);
  const feg::RunHandle run = feg::run_feg_a(p, v2(1, 0), 10.0, 10.0, 0.1, 5);
  const auto [sched, lseq] = feg::schedule_of_run(run);
  const feg::PotentialLedger led = feg::build_potential_ledger(sched, lseq, 5);
  for (int k = 1; k <= 5; ++k) {
    const double tau = run.trace.step_tau[k < 5 ? k : 4];
    const double eta = run.trace.step_eta[k < 5 ? k : 4];
    const double expected = 0.5 * k * ((k - 1) * eta + tau);
    CHECK(led.a[k] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(led.b[k] == doctest::Approx(double(k)).epsilon(1e-12));
  }
}

TEST_CASE("schedule admissibility: the unit-anchor schedule passes") {
  CHECK(feg::check_schedule_admissible(feg::feg_step_schedule(1.0, 0.0),
                                       const_L(1.0), 100));
  CHECK(feg::check_schedule_admissible(feg::feg_step_schedule(2.0, -0.2),
                                       const_L(2.0), 100));
  CHECK_THROWS_AS(feg::check_schedule_admissible(feg::feg_step_schedule(1.0, 0.0),
                                                 const_L(1.0), 0),
                  std::invalid_argument);
}

TEST_CASE("schedule admissibility: each condition can fail alone") {
  const feg::StepSchedule base = feg::feg_step_schedule(1.0, 0.0);

  feg::StepSchedule beta1 = base;
  beta1.beta = [](int k) { return k == 1 ? 1.0 : 1.0 / (k + 1); };
  CHECK_FALSE(feg::check_schedule_admissible(beta1, const_L(1.0), 3));

  feg::StepSchedule beta0 = base;
  beta0.beta = [](int k) { return k == 0 ? 0.5 : 1.0 / (k + 1); };
  CHECK_FALSE(feg::check_schedule_admissible(beta0, const_L(1.0), 3));

  feg::StepSchedule growing = base;
  growing.alpha = [](int k) { return double(k + 1); };  // alpha_1 = 2 > 1/L
  CHECK_FALSE(feg::check_schedule_admissible(growing, const_L(1.0), 3));

  // Step sizes within the per-step cap but jumping upward break the chain
  // inequality linking consecutive coefficients.
  feg::StepSchedule jump = base;
  jump.alpha = [](int k) { return k < 3 ? 0.5 : 0.9; };
  CHECK_FALSE(feg::check_schedule_admissible(jump, const_L(1.0), 6));

  // A hair above 1/L is allowed by the comparison tolerance.
  feg::StepSchedule hair = base;
  hair.alpha = [](int) { return 1.0 + 1e-13; };
  CHECK(feg::check_schedule_admissible(hair, const_L(1.0), 3));
  feg::StepSchedule over = base;
  over.alpha = [](int) { return 1.0 + 1e-9; };
  CHECK_FALSE(feg::check_schedule_admissible(over, const_L(1.0), 3));
}

TEST_CASE("potential values on the unit bilinear run: V_1 = 0 and flat chain") {
  const feg::ProblemSpec p = feg::make_bilinear(1.0);
  const feg::RunHandle run = feg::run_feg(p, v2(1, 0), 6);
  const auto [sched, lseq] = feg::schedule_of_run(run);
  const feg::PotentialLedger led = feg::build_potential_ledger(sched, lseq, 6);

  CHECK(feg::evaluate_potential(run.trace, led, p, 1) == 0.0);

  const std::vector<double> V = feg::potential_series(run.trace, led, p);
  const std::vector<double> Vs = feg::potential_series_serial(run.trace, led, p);
  REQUIRE(V.size() == 7);
  REQUIRE(Vs.size() == 7);
  for (int k = 0; k <= 6; ++k) {
    CHECK(V[k] == Vs[k]);
    CHECK(V[k] == feg::evaluate_potential(run.trace, led, p, k));
    CHECK(std::abs(V[k]) <= 1e-12);          // the saddle keeps V pinned at 0
    CHECK(V[k] <= V[1] + 1e-9);              // chain inequality
  }

  CHECK_THROWS_AS(feg::evaluate_potential(run.trace, led, p, 7), std::out_of_range);
  const feg::PotentialLedger short_led = feg::build_potential_ledger(sched, lseq, 3);
  CHECK_THROWS_AS(feg::evaluate_potential(run.trace, short_led, p, 5),
                  std::out_of_range);
  CHECK_THROWS_AS(feg::potential_series(run.trace, short_led, p),
                  std::out_of_range);
}

TEST_CASE("potential of a stationary trace is identically zero") {
  const feg::ProblemSpec p = feg::make_bilinear(1.0);
  const feg::RunHandle run = feg::run_feg(p, v2(0, 0), 4);
  const auto [sched, lseq] = feg::schedule_of_run(run);
  const feg::PotentialLedger led =
      feg::build_potential_ledger(sched, lseq, int(run.trace.iterates.size()) - 1);
  for (std::size_t k = 0; k < run.trace.iterates.size(); ++k)
    CHECK(feg::evaluate_potential(run.trace, led, p, int(k)) == 0.0);
}

TEST_CASE("rate bounds: hand-computed values") {
  CHECK(feg::bound_feg(1.0, 0.0, 1.0, 2) == 1.0);
  CHECK(feg::bound_feg(2.0, -0.1, 3.0, 10) == doctest::Approx(4.0).epsilon(1e-12));

  CHECK(feg::bound_fega(1.0, 0.0, 0.5, 1.0, 3) == doctest::Approx(4.0).epsilon(1e-12));
  // As delta -> 0 the adaptive guarantee recovers the known-constant one.
  CHECK(feg::bound_fega(1.3, -0.2, 1e-12, 0.7, 17) ==
        doctest::Approx(feg::bound_feg(1.3, -0.2, 0.7, 17)).epsilon(1e-9));

  CHECK(feg::bound_eag_c(1.0, 1.0, 3) == 16.25);
  CHECK(feg::bound_eag_v(1.0, 1.0, 3) == doctest::Approx(1.35).epsilon(1e-14));
  CHECK(feg::bound_eag_v(2.0, 0.5, 1) == doctest::Approx(4.5).epsilon(1e-14));
}

TEST_CASE("rate bounds: argument validation") {
  CHECK_THROWS_AS(feg::bound_feg(1.0, 0.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(feg::bound_feg(0.0, 0.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(feg::bound_feg(1.0, 0.0, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(feg::bound_feg(1.0, -0.5, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(feg::bound_fega(1.0, -0.3, 0.5, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(feg::bound_fega(1.0, 0.0, 1.0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(feg::bound_eag_c(1.0, 1.0, -2), std::invalid_argument);
}

TEST_CASE("stochastic bound: zero noise reduces to the deterministic rate") {
  const feg::VarianceSchedule zero = feg::VarianceSchedule::zero(10);
  CHECK(feg::bound_sfeg(2.0, 0.5, zero, 5) == doctest::Approx(0.16).epsilon(1e-14));
}

TEST_CASE("stochastic bound: the epsilon schedule telescopes to 4L^2D^2/k^2 + eps") {
  const feg::VarianceSchedule s = feg::schedule_for_epsilon(0.5, 20);
  for (const int k : {1, 2, 5, 13, 19, 20}) {
    CHECK(feg::bound_sfeg(1.0, 1.0, s, k) ==
          doctest::Approx(4.0 / (double(k) * k) + 0.5).epsilon(1e-12));
  }
  CHECK(feg::bound_sfeg(1.0, 1.0, s, 19) ==
        doctest::Approx(0.5110803324099723).epsilon(1e-14));
  CHECK(feg::bound_sfeg(1.0, 1.0, s, 20) == doctest::Approx(0.51).epsilon(1e-14));
}

TEST_CASE("stochastic bound: constant-variance partial sum") {
  const double s2 = 0.1;
  const int k = 30;
  const feg::VarianceSchedule s = feg::VarianceSchedule::constant(s2, k);
  double noise_sum = s2;  // sigma_0^2
  for (int l = 1; l <= k - 1; ++l)
    noise_sum += double(l) * l * s2 + double(l + 1) * (l + 1) * s2;
  const double expected = 4.0 / (double(k) * k) + 6.0 / (double(k) * k) * noise_sum;
  CHECK(feg::bound_sfeg(1.0, 1.0, s, k) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("the fast rate is pointwise below the anchored-baseline rate") {
  for (int k = 1; k <= 200; ++k) {
    CHECK(feg::bound_feg(1.3, 0.0, 0.7, k) <=
          feg::bound_eag_v(1.3, 0.7, k) * (1.0 + 1e-12));
  }
}

TEST_CASE("the bilinear trajectory is tight against the rate at k = 4l+2") {
  const feg::ProblemSpec p = feg::make_bilinear(1.0);
  const feg::RunHandle run = feg::run_feg(p, v2(1, 0), 26);
  for (const int k : {2, 6, 10, 14, 18, 22, 26}) {
    const double ratio =
        run.trace.grad_norm_sq[k] / feg::bound_feg(1.0, 0.0, 1.0, k);
    CHECK(ratio >= 1.0 - 1e-9);
    CHECK(ratio <= 1.0 + 1e-9);
  }
}

TEST_CASE("smoothness estimator: exact on the bilinear, zero on constants") {
  const feg::ProblemSpec p = feg::make_bilinear(3.0);
  feg::PairSampler s;
  s.center = v2(0, 0);
  s.radius = 2.0;
  s.seed = 5;
  const double est = feg::estimate_lipschitz(p.op, s, 100000);
  CHECK(std::abs(est - 3.0) <= 1e-12);  // every pair realizes the constant
  CHECK(est <= 3.0 + 1e-9);             // one-sidedness at the declared L

  feg::OperatorHandle zero;
  zero.dim = 2;
  zero.eval = [](const Vec& z) { return Vec(Vec::Zero(z.size())); };
  CHECK(feg::estimate_lipschitz(zero, s, 1000) == 0.0);
}

TEST_CASE("comonotonicity estimator: exact levels on linear operators") {
  feg::QuadraticMinimax q;
  q.A = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  q.B = Eigen::MatrixXd::Zero(1, 1);
  q.C = 2.0 * Eigen::MatrixXd::Identity(1, 1);
  const feg::ProblemSpec ident = feg::make_quadratic(q);  // F(z) = 2z
  feg::PairSampler s;
  s.center = v2(0, 0);
  s.radius = 2.0;
  s.seed = 5;
  CHECK(feg::estimate_comonotonicity(ident.op, s, 50000) == 0.5);

  const feg::ProblemSpec bil = feg::make_bilinear(2.0);
  CHECK(feg::estimate_comonotonicity(bil.op, s, 50000) == 0.0);
}

TEST_CASE("estimators are one-sided against the exact constants") {
  const feg::ProblemSpec p = feg::random_negative_comonotone(5, 6, -0.1);
  feg::PairSampler s;
  s.center = Vec::Zero(6);
  s.radius = 2.0;
  s.seed = 11;
  const double lip = feg::estimate_lipschitz(p.op, s, 100000);
  const double rho = feg::estimate_comonotonicity(p.op, s, 100000);
  CHECK(lip <= feg::spectral_norm_power(*p.matrix) + 1e-9);
  CHECK(rho >= feg::comonotonicity_of_linear(*p.matrix) - 1e-9);
  CHECK(rho >= -0.1 - 1e-9);  // declared level
}

TEST_CASE("estimator parallel kernels reproduce the serial reference bitwise") {
  const feg::ProblemSpec p = feg::random_negative_comonotone(5, 6, -0.1);
  feg::PairSampler s;
  s.center = Vec::Zero(6);
  s.radius = 2.0;
  s.seed = 11;
  CHECK(feg::estimate_lipschitz(p.op, s, 50000) ==
        feg::estimate_lipschitz_serial(p.op, s, 50000));
  CHECK(feg::estimate_comonotonicity(p.op, s, 50000) ==
        feg::estimate_comonotonicity_serial(p.op, s, 50000));
}

TEST_CASE("estimators reject bad input and fully degenerate samples") {
  const feg::ProblemSpec p = feg::make_bilinear(1.0);
  feg::PairSampler s;
  s.center = v2(0, 0);
  s.radius = 1.0;
  CHECK_THROWS_AS(feg::estimate_lipschitz(p.op, s, 0), std::invalid_argument);
  feg::PairSampler bad_dim = s;
  bad_dim.center = Vec::Zero(3);
  CHECK_THROWS_AS(feg::estimate_lipschitz(p.op, bad_dim, 10), std::invalid_argument);
  feg::PairSampler bad_radius = s;
  bad_radius.radius = 0.0;
  CHECK_THROWS_AS(feg::estimate_lipschitz(p.op, bad_radius, 10),
                  std::invalid_argument);

  feg::PairSampler tiny = s;
  tiny.radius = 1e-30;  // every pair is closer than the degeneracy cutoff
  CHECK_THROWS_AS(feg::estimate_lipschitz(p.op, tiny, 100), std::runtime_error);

  feg::OperatorHandle zero;
  zero.dim = 2;
  zero.eval = [](const Vec& z) { return Vec(Vec::Zero(z.size())); };
  CHECK_THROWS_AS(feg::estimate_comonotonicity(zero, s, 100), std::runtime_error);
}

TEST_CASE("span check accepts genuine first-order trajectories") {
  const feg::ProblemSpec bil = feg::make_bilinear(1.0);
  CHECK(feg::check_span(feg::run_feg(bil, v2(1, 0), 8).trace, bil.op));
  CHECK(feg::check_span(
      feg::run_eag(bil, v2(1, 0), 8, feg::EagVariant::V).trace, bil.op));
  CHECK(feg::check_span(feg::run_eg_plus(bil, v2(1, 0), 8, 0.5, 0.5).trace,
                        bil.op));

  const feg::ProblemSpec rnd = feg::random_negative_comonotone(3, 4, -0.1);
  Vec z0(4);
  z0 << 1.0, -0.5, 0.25, 0.75;
  CHECK(feg::check_span(feg::run_feg_a(rnd.op, z0, 1.0, 1.0, 0.1, 10).trace,
                        rnd.op));
}

TEST_CASE("span check rejects a point moved off the operator span") {
  // F(x, y1, y2) = (y1, -x, 0): every operator value lies in the first two
  // coordinates, so a third-coordinate perturbation leaves the span.
  feg::QuadraticMinimax q;
  q.A = Eigen::MatrixXd::Zero(1, 1);
  q.B = Eigen::MatrixXd::Zero(1, 2);
  q.B(0, 0) = 1.0;
  q.C = Eigen::MatrixXd::Zero(2, 2);
  feg::ProblemSpec p = feg::make_quadratic(q);
  p.comonotone = 0.0;  // skew block matrix
  Vec z0(3);
  z0 << 1.0, 0.5, 0.0;
  const feg::RunHandle run = feg::run_feg(p, z0, 5);
  CHECK(feg::check_span(run.trace, p.op));

  feg::Trace bent = run.trace;
  bent.iterates[1][2] += 1e-4;
  CHECK_FALSE(feg::check_span(bent, p.op));
}

TEST_CASE("span check refuses dimensions above the least-squares limit") {
  feg::OperatorHandle wide;
  wide.dim = 18;
  wide.eval = [](const Vec& z) { return z; };
  feg::Trace tr;
  tr.iterates.push_back(Vec::Zero(18));
  CHECK_THROWS_AS(feg::check_span(tr, wide), std::invalid_argument);
}

TEST_CASE("schedule_of_run reproduces the realized step sequences") {
  const feg::ProblemSpec p = feg::make_bilinear(2.0);
  feg::ProblemSpec monotone = p;
  monotone.comonotone = -0.1;
  const feg::RunHandle run = feg::run_feg(monotone, v2(1, 0), 5);
  const auto [sched, lseq] = feg::schedule_of_run(run);
  CHECK(sched.alpha(0) == 0.5);
  CHECK(sched.alpha(9) == 0.5);
  CHECK(sched.beta(5) == 1.0 / 6.0);
  CHECK(sched.rho(7) == -0.1);
  CHECK(lseq(3) == 2.0);

  const feg::RunHandle ad = feg::run_feg_a(p, v2(1, 0), 10.0, 10.0, 0.1, 3);
  const auto [asched, alseq] = feg::schedule_of_run(ad);
  for (int k = 0; k <= 3; ++k) {
    const int idx = std::min<int>(k, int(ad.trace.step_tau.size()) - 1);
    CHECK(asched.alpha(k) == ad.trace.step_tau[idx]);
    CHECK(asched.rho(k) ==
          0.5 * (ad.trace.step_eta[idx] - ad.trace.step_tau[idx]));
    CHECK(alseq(k) == 1.0 / ad.trace.step_tau[idx]);
  }
  // Past the last committed step the schedule repeats it.
  CHECK(asched.alpha(10) == ad.trace.step_tau.back());

  CHECK_THROWS_AS(feg::schedule_of_run(feg::run_eg(p, v2(1, 0), 2)),
                  std::invalid_argument);
}

TEST_CASE("certify_run: fast method on the bilinear saddle passes everything") {
  const feg::ProblemSpec p = feg::make_bilinear(1.0);
  const feg::RunHandle run = feg::run_feg(p, v2(1, 0), 20);
  const feg::CertificateReport rep = feg::certify_run(run);
  CHECK(rep.potential == CertStatus::pass);
  CHECK(rep.bound == CertStatus::pass);
  CHECK(rep.span == CertStatus::pass);
  CHECK(rep.all_pass());
  REQUIRE(rep.steps.size() == 21);
  CHECK_FALSE(rep.steps[0].bound.has_value());  // rates start at k = 1
  REQUIRE(rep.steps[2].bound.has_value());
  CHECK(*rep.steps[2].bound == 1.0);
  CHECK(rep.bound_ratio_max <= 1.0 + 1e-9);  // tight at k = 2
  CHECK(rep.bound_ratio_max > 0.99);

  // The report is thread-count invariant.
  const feg::CertificateReport rep1 = feg::certify_run(run, 1);
  const feg::CertificateReport rep4 = feg::certify_run(run, 4);
  CHECK(rep1.potential == rep4.potential);
  CHECK(rep1.bound == rep4.bound);
  CHECK(rep1.span == rep4.span);
  CHECK(rep1.bound_ratio_max == rep4.bound_ratio_max);
}

TEST_CASE("certify_run: generated negative-comonotone problems pass") {
  const feg::ProblemSpec p = feg::random_negative_comonotone(9, 4, -0.1);
  Vec z0(4);
  z0 << 0.6, -0.4, 0.2, 0.8;
  const feg::CertificateReport rep = feg::certify_run(feg::run_feg(p, z0, 50));
  CHECK(rep.potential == CertStatus::pass);
  CHECK(rep.bound == CertStatus::pass);
  CHECK(rep.span == CertStatus::pass);
}

TEST_CASE("certify_run: adaptive runs pass; missing metadata downgrades to skip") {
  const feg::ProblemSpec p = feg::make_bilinear(1.0);
  const feg::CertificateReport rep =
      feg::certify_run(feg::run_feg_a(p, v2(1, 0), 1.0, 1.0, 0.1, 30));
  CHECK(rep.potential == CertStatus::pass);
  CHECK(rep.bound == CertStatus::pass);
  CHECK(rep.span == CertStatus::pass);
  CHECK(rep.bound_ratio_max <= 1.0 + 1e-9);

  // Operator-only runs carry no solution, so no rate bound can be checked.
  const feg::CertificateReport bare =
      feg::certify_run(feg::run_feg_a(p.op, v2(1, 0), 1.0, 1.0, 0.1, 10));
  CHECK(bare.potential == CertStatus::pass);
  CHECK(bare.bound == CertStatus::skipped);
  CHECK(bare.notes.find("no reference solution") != std::string::npos);
}

TEST_CASE("certify_run: baselines get bounds only where a guarantee exists") {
  const feg::ProblemSpec p = feg::make_bilinear(1.0);
  const Vec z0 = v2(1, 0);

  const feg::CertificateReport c =
      feg::certify_run(feg::run_eag(p, z0, 50, feg::EagVariant::C));
  CHECK(c.potential == CertStatus::skipped);
  CHECK(c.bound == CertStatus::pass);
  CHECK(c.span == CertStatus::pass);
  CHECK(c.notes.find("does not follow the family schedule") != std::string::npos);

  const feg::CertificateReport v =
      feg::certify_run(feg::run_eag(p, z0, 50, feg::EagVariant::V));
  CHECK(v.bound == CertStatus::pass);

  const feg::CertificateReport eg = feg::certify_run(feg::run_eg(p, z0, 10));
  CHECK(eg.potential == CertStatus::skipped);
  CHECK(eg.bound == CertStatus::skipped);
  CHECK(eg.span == CertStatus::pass);
  CHECK(eg.all_pass());  // skips are not failures
}

TEST_CASE("certify_run: the stall trajectory still certifies cleanly") {
  feg::ProblemSpec wc = feg::make_worst_case_smooth(1.0, 1.0);
  wc.comonotone = 0.0;
  const feg::RunHandle run = feg::run_feg(wc, Vec::Zero(2), 10);
  for (const double g : run.trace.grad_norm_sq) CHECK(g == 2.0);
  const feg::CertificateReport rep = feg::certify_run(run);
  CHECK(rep.potential == CertStatus::pass);
  CHECK(rep.bound == CertStatus::skipped);  // no reference solution exists
  CHECK(rep.span == CertStatus::pass);
  CHECK(rep.all_pass());
}

TEST_CASE("certify_run: an overstated comonotonicity level is caught") {
  feg::ProblemSpec inflated = feg::make_bilinear(1.0);
  inflated.comonotone = 0.4;  // the bilinear saddle is only 0-comonotone
  const feg::RunHandle run = feg::run_feg(inflated, v2(1, 0), 8);
  const feg::CertificateReport rep = feg::certify_run(run);
  CHECK(rep.potential == CertStatus::fail);  // the anchored chain breaks
  CHECK(rep.bound == CertStatus::fail);
  CHECK(rep.span == CertStatus::pass);
  CHECK_FALSE(rep.all_pass());
  CHECK(rep.bound_ratio_max > 100.0);
  // Per-step link misses at steps whose local conditions fail are logged
  // rather than counted as failures; the verdict comes from the chain.
  CHECK(rep.notes.find("link miss") != std::string::npos);
}
