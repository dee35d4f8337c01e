#pragma once
// Core vocabulary shared by the whole library: dense points, the saddle
// gradient operator interface F = (grad_x f, -grad_y f), and the problem
// container bundling an operator with its (optionally) known constants.
//
// Everything here is deliberately boring and strict:
//   * all scalars are IEEE-754 doubles,
//   * operator evaluation is checked for finiteness on both sides,
//   * linear combinations are accumulated in a fixed left-to-right order so
//     that identical inputs give bitwise-identical outputs.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace feg {

using Vec = Eigen::VectorXd;

// Below this operator norm an iterate counts as numerically stationary.
inline constexpr double stationary_norm = 1e-14;

bool all_finite(const Vec& v);

// A deterministic map z -> Fz on R^dim. eval must be reentrant and must
// return bitwise-identical output for identical input.
struct OperatorHandle {
  int dim = 0;
  std::function<Vec(const Vec&)> eval;
};

// An operator together with whatever is known about it. Fields are plain
// data; instances are treated as immutable once built and are safe to share
// across threads.
struct ProblemSpec {
  std::string label;
  OperatorHandle op;
  std::optional<double> lipschitz;            // smoothness constant L > 0
  std::optional<double> comonotone;           // comonotonicity level rho
  std::optional<Vec> solution;                // a stationary point, if known
  std::optional<Eigen::MatrixXd> matrix;      // block matrix when F is linear
};

// Evaluate F with dimension/finiteness checks.
// Throws std::invalid_argument on dimension mismatch or non-finite input and
// std::runtime_error naming the offending coordinate on non-finite output.
Vec evaluate_operator(const OperatorHandle& F, const Vec& z);
Vec evaluate_operator(const ProblemSpec& p, const Vec& z);

// sum_i coeff_i * point_i accumulated strictly left to right.
// The list must be nonempty and all points must share one dimension.
Vec vector_combine(const std::vector<std::pair<double, const Vec*>>& terms);

}  // namespace feg
