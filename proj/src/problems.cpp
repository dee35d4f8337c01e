#include "feg/problems.hpp"

#include "feg/rng.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace feg {

Eigen::MatrixXd operator_matrix(const QuadraticMinimax& q) {
  const Eigen::Index dx = q.A.rows(), dy = q.C.rows();
  if (q.A.cols() != dx || q.C.cols() != dy || q.B.rows() != dx || q.B.cols() != dy) {
    throw std::invalid_argument("operator_matrix: inconsistent block dimensions");
  }
  Eigen::MatrixXd M(dx + dy, dx + dy);
  M.topLeftCorner(dx, dx) = q.A;
  M.topRightCorner(dx, dy) = q.B;
  M.bottomLeftCorner(dy, dx) = -q.B.transpose();
  M.bottomRightCorner(dy, dy) = q.C;
  return M;
}

double spectral_norm_power(const Eigen::MatrixXd& M, int iters, double tol) {
  if (M.rows() == 0) return 0.0;
  const Eigen::MatrixXd S = M.transpose() * M;
  Vec v(S.rows());
  // Deterministic start with a slight tilt so it is not orthogonal to the
  // leading eigenvector of typical structured instances.
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 1e-6 * static_cast<double>(i);
  v /= v.norm();
  for (int it = 0; it < iters; ++it) {
    Vec w = S * v;
    // The Rayleigh quotient is certified only when the eigen-residual is
    // small; a successive-difference stop can freeze far from the norm when
    // the two leading eigenvalues are close.
    const double lam = v.dot(w);
    if ((w - lam * v).norm() <= tol * std::max(1.0, std::abs(lam)))
      return std::sqrt(std::max(lam, 0.0));
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
  }
  // The budget ran out without certification (clustered leading eigenvalues
  // stall the iteration); use the exact symmetric eigensolve rather than
  // report an undershooting norm.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_norm_power: eigendecomposition failed");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

namespace {

OperatorHandle linear_operator(Eigen::MatrixXd M) {
  auto held = std::make_shared<const Eigen::MatrixXd>(std::move(M));
  OperatorHandle F;
  F.dim = static_cast<int>(held->rows());
  F.eval = [held](const Vec& z) -> Vec { return (*held) * z; };
  return F;
}

}  // namespace

ProblemSpec make_bilinear(double L) {
  if (!(L > 0.0)) throw std::invalid_argument("make_bilinear: L must be positive");
  ProblemSpec p;
  p.label = "bilinear";
  p.op.dim = 2;
  p.op.eval = [L](const Vec& z) -> Vec {
    Vec out(2);
    out[0] = L * z[1];
    out[1] = -L * z[0];
    return out;
  };
  p.lipschitz = L;
  p.comonotone = 0.0;
  p.solution = Vec::Zero(2);
  Eigen::MatrixXd M(2, 2);
  M << 0.0, L, -L, 0.0;
  p.matrix = M;
  return p;
}

ProblemSpec make_worst_case_smooth(double L, double R) {
  if (!(L > 0.0) || !(R > 0.0)) {
    throw std::invalid_argument("make_worst_case_smooth: L and R must be positive");
  }
  ProblemSpec p;
  p.label = "worst-case";
  p.op.dim = 2;
  const double edge = std::sqrt(R / L);
  const double drop = std::sqrt(L * R);
  p.op.eval = [L, edge, drop](const Vec& z) -> Vec {
    const double s = z[0] - z[1];
    double g = 0.0;
    if (s < -edge) {
      g = 0.0;
    } else if (s < 0.0) {
      g = -L * s - drop;
    } else if (s < edge) {
      g = L * s - drop;
    } else {
      g = 0.0;
    }
    Vec out(2);
    out[0] = g;  // identical scalar in both slots: x == y stays exact
    out[1] = g;
    return out;
  };
  p.lipschitz = L;
  return p;
}

ProblemSpec make_quadratic(const QuadraticMinimax& q) {
  const Eigen::Index dx = q.A.rows(), dy = q.C.rows();
  if (q.A.cols() != dx || q.C.cols() != dy || q.B.rows() != dx || q.B.cols() != dy) {
    throw std::invalid_argument("make_quadratic: inconsistent block dimensions");
  }
  if (((q.A - q.A.transpose()).cwiseAbs().maxCoeff() > 1e-12) ||
      ((q.C - q.C.transpose()).cwiseAbs().maxCoeff() > 1e-12)) {
    throw std::invalid_argument("make_quadratic: A and C must be symmetric (1e-12 entrywise)");
  }
  Eigen::MatrixXd M = operator_matrix(q);
  ProblemSpec p;
  p.label = "quadratic";
  p.op = linear_operator(M);
  p.lipschitz = spectral_norm_power(M);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() > 0 && sv[sv.size() - 1] > 1e-12 * std::max(1.0, sv[0])) {
    p.solution = Vec::Zero(M.rows());
  }
  p.matrix = std::move(M);
  return p;
}

bool check_interaction_dominance(const QuadraticMinimax& q, double alpha, double eta) {
  if (alpha < 0.0) throw std::invalid_argument("check_interaction_dominance: alpha must be >= 0");
  if (!(eta > 0.0)) throw std::invalid_argument("check_interaction_dominance: eta must be positive");
  const double smooth = spectral_norm_power(operator_matrix(q));
  if (!(eta > smooth)) {
    throw std::invalid_argument(
        "check_interaction_dominance: eta must strictly exceed the smoothness constant");
  }
  const Eigen::Index dx = q.A.rows(), dy = q.C.rows();
  const Eigen::MatrixXd Ix = Eigen::MatrixXd::Identity(dx, dx);
  const Eigen::MatrixXd Iy = Eigen::MatrixXd::Identity(dy, dy);

  Eigen::FullPivLU<Eigen::MatrixXd> luC(eta * Iy + q.C);
  if (!luC.isInvertible()) throw std::runtime_error("check_interaction_dominance: eta I + C is singular");
  Eigen::FullPivLU<Eigen::MatrixXd> luA(eta * Ix + q.A);
  if (!luA.isInvertible()) throw std::runtime_error("check_interaction_dominance: eta I + A is singular");

  Eigen::MatrixXd T1 = q.A + q.B * luC.solve(q.B.transpose());
  Eigen::MatrixXd T2 = q.C + q.B.transpose() * luA.solve(q.B);
  T1 = 0.5 * (T1 + T1.transpose()).eval();
  T2 = 0.5 * (T2 + T2.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(T1), e2(T2);
  if (e1.info() != Eigen::Success || e2.info() != Eigen::Success) {
    throw std::runtime_error("check_interaction_dominance: eigensolve failed");
  }
  const double tol = 1e-10;
  return e1.eigenvalues().minCoeff() >= alpha - tol &&
         e2.eigenvalues().minCoeff() >= alpha - tol;
}

double comonotonicity_of_linear(const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  const Eigen::MatrixXd G = M.transpose() * M;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, G);
  if (es.info() != Eigen::Success) {
    throw std::invalid_argument("comonotonicity_of_linear: M'M not positive definite");
  }
  return es.eigenvalues().minCoeff();
}

ProblemSpec random_negative_comonotone(std::uint64_t seed, int d, double rho_target) {
  if (d < 2 || d % 2 != 0) {
    throw std::invalid_argument("random_negative_comonotone: d must be even and >= 2");
  }
  if (!(rho_target < 0.0)) {
    throw std::invalid_argument("random_negative_comonotone: rho_target must be negative");
  }
  const int h = d / 2;
  const double eta = -1.0 / rho_target;
  const double b = 0.6;
  const double a_target = 0.4 * b * b / eta;  // keeps the Schur tests comfortably PSD

  auto gauss_matrix = [&](std::uint64_t attempt, std::uint64_t salt) {
    Eigen::MatrixXd G(h, h);
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < h; ++j) {
        G(i, j) = gaussian_at(mix_key(seed, attempt, salt),
                              static_cast<std::uint64_t>(i * h + j));
      }
    }
    return G;
  };
  auto scaled_symmetric = [&](std::uint64_t attempt, std::uint64_t salt) {
    Eigen::MatrixXd G = gauss_matrix(attempt, salt);
    Eigen::MatrixXd S = 0.5 * (G + G.transpose());
    const double n = spectral_norm_power(S);
    if (n == 0.0) return S;
    return Eigen::MatrixXd(S * (a_target / n));
  };

  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    QuadraticMinimax q;
    q.A = scaled_symmetric(attempt, 1);
    q.C = scaled_symmetric(attempt, 2);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss_matrix(attempt, 3));
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(h, h);
    q.B = b * Q;

    const Eigen::MatrixXd M = operator_matrix(q);
    const double L = spectral_norm_power(M);
    if (!(eta > L)) continue;

    // The instance must be genuinely nonmonotone...
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(q.A), ec(q.C);
    const double sym_min = std::min(ea.eigenvalues().minCoeff(), ec.eigenvalues().minCoeff());
    if (!(sym_min < -1e-8)) continue;

    // ...nonsingular (so the origin is the stationary point)...
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (!(sv[sv.size() - 1] > 1e-10 * sv[0])) continue;

    // ...and certified: dominance at eta, plus the exact comonotonicity level
    // of the linear operator must not undershoot the declared target.
    if (!check_interaction_dominance(q, 0.0, eta)) continue;
    if (!(comonotonicity_of_linear(M) >= rho_target - 1e-12)) continue;

    ProblemSpec p;
    p.label = "random-nc";
    p.op = linear_operator(M);
    p.lipschitz = L;
    p.comonotone = rho_target;
    p.solution = Vec::Zero(d);
    p.matrix = M;
    return p;
  }
  throw std::runtime_error(
      "random_negative_comonotone: certification failed after 100 resampling attempts");
}

}  // namespace feg
