#pragma once
// Problem catalog: the bilinear saddle, the piecewise-linear worst-case
// smooth operator, quadratic minimax instances, and a seeded generator for
// negatively comonotone quadratics certified by the interaction-dominance
// (Schur-complement) condition.

#include "feg/core.hpp"

#include <cstdint>

namespace feg {

// f(x,y) = (1/2) x'Ax + x'By - (1/2) y'Cy, so the saddle gradient is
// F(x,y) = (Ax + By, -B'x + Cy).
struct QuadraticMinimax {
  Eigen::MatrixXd A;  // symmetric, d_x x d_x
  Eigen::MatrixXd B;  // d_x x d_y
  Eigen::MatrixXd C;  // symmetric, d_y x d_y
};

// Block operator matrix [[A, B], [-B', C]].
Eigen::MatrixXd operator_matrix(const QuadraticMinimax& q);

// Spectral norm (largest singular value): power iteration on M'M from a
// deterministic start, stopped once the eigen-residual certifies the value
// to the relative tolerance; falls back to the exact symmetric eigensolve
// when the budget runs out (clustered leading eigenvalues stall the
// iteration).
double spectral_norm_power(const Eigen::MatrixXd& M, int iters = 200,
                           double tol = 1e-12);

// f(x,y) = L x y on R^2: F(x,y) = (Ly, -Lx), Lipschitz L, monotone (rho=0),
// solution at the origin.
ProblemSpec make_bilinear(double L);

// The L-smooth two-dimensional function whose saddle gradient stalls every
// span-respecting method started at the origin. With s = x - y:
//   F = (0,0)                          for s <  -sqrt(R/L)
//   F = (-Ls - sqrt(LR), -Ls - sqrt(LR)) for -sqrt(R/L) <= s < 0
//   F = ( Ls - sqrt(LR),  Ls - sqrt(LR)) for 0 <= s < sqrt(R/L)
//   F = (0,0)                          for s >= sqrt(R/L)
// Region boundaries are half-open with ties going to the right-hand branch;
// the operator is continuous so the choice never changes values. Both output
// coordinates are produced by the same scalar computation, so inputs with
// x == y give bitwise-equal components.
ProblemSpec make_worst_case_smooth(double L, double R);

// Wrap a quadratic instance: checks symmetry of A and C (1e-12 entrywise),
// estimates L by power iteration, and records the solution z* = 0 when the
// operator matrix is nonsingular. The comonotonicity level is left unset.
ProblemSpec make_quadratic(const QuadraticMinimax& q);

// Interaction dominance test: true iff
//   A + B (eta I + C)^-1 B'  >=  alpha I   and
//   C + B' (eta I + A)^-1 B  >=  alpha I,
// each checked via the minimum eigenvalue with tolerance 1e-10. Requires
// eta to strictly exceed the smoothness constant of q. A passing check at
// alpha = 0 certifies that F is (-1/eta)-comonotone.
bool check_interaction_dominance(const QuadraticMinimax& q, double alpha,
                                 double eta);

// Seeded generator for quadratics that are genuinely negatively comonotone
// yet still satisfy interaction dominance at eta = -1/rho_target (so
// comonotone = rho_target is certified). Deterministic in seed; throws after
// 100 failed resampling attempts.
ProblemSpec random_negative_comonotone(std::uint64_t seed, int d,
                                       double rho_target);

// Exact comonotonicity level of a linear operator F(z) = Mz:
//   min_w  w' Sym(M) w / w' M'M w,
// computed as a symmetric-definite generalized eigenvalue problem. Used as a
// ground-truth oracle for the sampling estimator and the generator above.
// Throws if M'M is not positive definite (singular M).
double comonotonicity_of_linear(const Eigen::MatrixXd& M);

}  // namespace feg
